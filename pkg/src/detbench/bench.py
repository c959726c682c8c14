"""Stage-resolved speed measurement, pluggable detector backends, and
synthetic dataset/detector generators for desk-scale end-to-end runs.

The measured stages mirror the usual reporting convention: letterbox math
is the preprocess stage, the backend call is inference, and confidence
filtering plus NMS is postprocess. Command backends self-report per-image
inference milliseconds (a subprocess wall clock would bill process startup
to the model); the harness times the other two stages itself. Timing runs
are strictly sequential at batch size 1, and absolute milliseconds are
hardware-bound, so they are never acceptance targets.
"""

from __future__ import annotations

import hashlib
import json
import math
import subprocess
import tempfile
import time
from collections.abc import Mapping
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .augment import ImageBuffer
from .dataset import BBox, DatasetIndex, load_dataset
from .errors import BenchError, DatasetError
from .geometry import letterbox
from .metrics import iou
from .postprocess import (
    DEFAULT_CONFIDENCE,
    DEFAULT_NMS_IOU,
    Detection,
    postprocess_image,
)

_U64 = (1 << 64) - 1


@dataclass(frozen=True)
class ScoreLaw:
    """Maps a jittered box's IoU with its source to a confidence."""

    iou_weight: float = 1.0
    offset: float = 0.0
    noise_sigma: float = 0.0

    def score(self, overlap: float, noise: float) -> float:
        raw = self.iou_weight * overlap + self.offset + noise * self.noise_sigma
        return min(max(raw, 0.0), 1.0)


@dataclass(frozen=True)
class NoiseModel:
    """Corruption applied by the synthetic detector; all-zero = perfect echo."""

    coordinate_jitter_sigma: float = 0.0
    drop_rate: float = 0.0
    spurious_rate: float = 0.0
    score_law: ScoreLaw = ScoreLaw()

    def __post_init__(self):
        if not 0.0 <= self.drop_rate <= 1.0:
            raise BenchError(f"drop_rate must be in [0, 1], got {self.drop_rate!r}")
        if self.coordinate_jitter_sigma < 0 or self.spurious_rate < 0:
            raise BenchError("jitter sigma and spurious rate must be >= 0")


def _image_rng(seed: int, image_id: str, stream: int) -> np.random.Generator:
    # Per-image, per-purpose streams: results depend only on (seed, image),
    # never on iteration order, and changing one noise rate cannot shift
    # the draws feeding another (drop decisions stay aligned across rates).
    digest = hashlib.sha256(image_id.encode("utf-8")).digest()
    words = [int.from_bytes(digest[i : i + 8], "big") for i in range(0, 32, 8)]
    ss = np.random.SeedSequence([seed & _U64, *words, stream])
    return np.random.Generator(np.random.PCG64(ss))


def oracle_detect(
    index: DatasetIndex, image_id: str, noise: NoiseModel, seed: int = 0
) -> list[Detection]:
    """Synthetic detector: ground truth jittered, dropped, and padded with
    spurious boxes. Deterministic per (index contents, image, noise, seed)."""
    record = index.record(image_id)
    drops = _image_rng(seed, image_id, 0)
    jitter = _image_rng(seed, image_id, 1)
    score_rng = _image_rng(seed, image_id, 2)
    spurious_rng = _image_rng(seed, image_id, 3)
    width = float(record.width)
    height = float(record.height)
    sigma = noise.coordinate_jitter_sigma
    law = noise.score_law

    dets: list[Detection] = []
    for ann in record.annotations:
        u = drops.uniform()
        z = jitter.standard_normal(4)
        score_noise = score_rng.standard_normal()
        if u < noise.drop_rate:
            continue
        b = ann.box
        x1 = b.x1 + z[0] * sigma
        y1 = b.y1 + z[1] * sigma
        x2 = b.x2 + z[2] * sigma
        y2 = b.y2 + z[3] * sigma
        if x2 < x1:
            x1, x2 = x2, x1
        if y2 < y1:
            y1, y2 = y2, y1
        jittered = BBox(
            min(max(x1, 0.0), width),
            min(max(y1, 0.0), height),
            min(max(x2, 0.0), width),
            min(max(y2, 0.0), height),
        )
        dets.append(
            Detection(
                image_id=image_id,
                class_id=ann.class_id,
                box=jittered,
                score=law.score(iou(b, jittered), score_noise),
            )
        )

    n_spurious = int(spurious_rng.poisson(noise.spurious_rate))
    n_classes = len(index.class_table)
    for _ in range(n_spurious):
        xs = np.sort(spurious_rng.uniform(0.0, width, size=2))
        ys = np.sort(spurious_rng.uniform(0.0, height, size=2))
        class_id = int(spurious_rng.integers(0, n_classes))
        score = law.score(0.0, spurious_rng.standard_normal())
        dets.append(
            Detection(
                image_id=image_id,
                class_id=class_id,
                box=BBox(xs[0], ys[0], xs[1], ys[1]),
                score=score,
            )
        )
    return dets


def generate_synthetic_dataset(
    out_dir: Path | str,
    n_images: int = 50,
    n_classes: int = 4,
    boxes_per_image: tuple[int, int] = (0, 6),
    dims: tuple[int, int] = (256, 640),
    seed: int = 0,
) -> DatasetIndex:
    """Write a small valid dataset root and load it back.

    Images are a flat background with one brighter patch per box, so
    photometric augmentation visibly changes pixels. Labels are 6-decimal
    YOLO lines, byte-identical per seed. Images with zero boxes get no
    label file (negative samples). A meta.csv with synthetic patient ids
    makes grouped splitting exercisable.
    """
    if n_images < 1 or n_classes < 1:
        raise DatasetError("n_images and n_classes must be positive")
    lo_b, hi_b = boxes_per_image
    if lo_b < 0 or hi_b < lo_b:
        raise DatasetError(f"bad boxes_per_image range {boxes_per_image!r}")
    lo_d, hi_d = dims
    if lo_d < 32 or hi_d < lo_d:
        raise DatasetError(f"bad dims range {dims!r} (min side 32)")

    out_dir = Path(out_dir)
    (out_dir / "images").mkdir(parents=True, exist_ok=True)
    (out_dir / "labels").mkdir(parents=True, exist_ok=True)
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed & _U64, 0xDA7A])))

    (out_dir / "classes.txt").write_text(
        "".join(f"class_{i}\n" for i in range(n_classes)), encoding="utf-8"
    )

    meta_lines = ["image_id,width,height,patient_id"]
    for i in range(n_images):
        image_id = f"synth_{i:05d}"
        width = int(rng.integers(lo_d, hi_d + 1))
        height = int(rng.integers(lo_d, hi_d + 1))
        n_boxes = int(rng.integers(lo_b, hi_b + 1))

        pixels = np.full((height, width, 1), 28, dtype=np.uint8)
        label_lines = []
        for _ in range(n_boxes):
            # Box geometry in millionths so the 6-decimal label round-trips
            # exactly and never leaves the image.
            w_u = int(rng.integers(50_000, 400_001))
            h_u = int(rng.integers(50_000, 400_001))
            half_w = (w_u + 1) // 2
            half_h = (h_u + 1) // 2
            cx_u = int(rng.integers(half_w, 1_000_000 - half_w + 1))
            cy_u = int(rng.integers(half_h, 1_000_000 - half_h + 1))
            class_id = int(rng.integers(0, n_classes))
            label_lines.append(
                f"{class_id} {cx_u / 1e6:.6f} {cy_u / 1e6:.6f} {w_u / 1e6:.6f} {h_u / 1e6:.6f}"
            )
            px1 = int(round((cx_u - w_u / 2) / 1e6 * width))
            py1 = int(round((cy_u - h_u / 2) / 1e6 * height))
            px2 = max(px1 + 1, int(round((cx_u + w_u / 2) / 1e6 * width)))
            py2 = max(py1 + 1, int(round((cy_u + h_u / 2) / 1e6 * height)))
            value = 80 + (class_id * 120) // max(1, n_classes - 1)
            pixels[py1:py2, px1:px2, 0] = value

        ImageBuffer(pixels=pixels).to_file(out_dir / "images" / f"{image_id}.png")
        if label_lines:
            (out_dir / "labels" / f"{image_id}.txt").write_text(
                "\n".join(label_lines) + "\n", encoding="utf-8"
            )
        meta_lines.append(f"{image_id},{width},{height},patient_{i // 4:04d}")

    (out_dir / "meta.csv").write_text("\n".join(meta_lines) + "\n", encoding="utf-8")
    return load_dataset(out_dir)


@dataclass(frozen=True)
class DetectorBackend:
    """A detector behind the file-interchange boundary.

    kind "oracle": config {"noise": NoiseModel, "seed": int}.
    kind "command": config {"argv": [...], "interchange": "dets-v1"}; the
    argv is invoked with ``--images DIR --out DETS --timing TIMING
    --imgsz N`` appended and must exit 0.
    """

    name: str
    kind: str
    config: Mapping[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.kind not in ("oracle", "command"):
            raise BenchError(f"unknown backend kind {self.kind!r}")
        if self.kind == "command":
            if not self.config.get("argv"):
                raise BenchError("command backend needs a non-empty argv")
            declared = self.config.get("interchange")
            if declared != "dets-v1":
                raise BenchError(
                    f"command backend must declare interchange 'dets-v1', got {declared!r}"
                )


@dataclass(frozen=True)
class TimingBreakdown:
    """Mean per-image milliseconds per stage; total is exactly their sum."""

    preprocess_ms: float
    inference_ms: float
    postprocess_ms: float
    total_ms: float
    n_images: int
    n_warmup: int

    def __post_init__(self):
        stages = (self.preprocess_ms, self.inference_ms, self.postprocess_ms)
        if any(s < 0 for s in stages):
            raise BenchError(f"negative stage time in {stages}")
        if abs(self.total_ms - sum(stages)) > 1e-9:
            raise BenchError(
                f"total_ms {self.total_ms} != stage sum {sum(stages)}"
            )

    @classmethod
    def from_stage_means(
        cls, pre: float, inf: float, post: float, n_images: int, n_warmup: int
    ) -> "TimingBreakdown":
        return cls(
            preprocess_ms=pre,
            inference_ms=inf,
            postprocess_ms=post,
            total_ms=pre + inf + post,
            n_images=n_images,
            n_warmup=n_warmup,
        )


@dataclass
class BenchResult:
    breakdown: TimingBreakdown
    percentiles: dict[str, dict[str, float]]
    warnings: list[str]
    detections: list[Detection]
    transforms: list[dict]
    backend: str
    target_size: int
    repeats: int


def _find_image_paths(root: Path) -> dict[str, Path]:
    paths: dict[str, Path] = {}
    for path in sorted((root / "images").rglob("*")):
        if path.is_file() and path.suffix.lower() in (".png", ".jpg", ".jpeg", ".bmp"):
            paths[path.stem] = path
    return paths


def _run_command_backend(
    backend: DetectorBackend,
    stage_dir: Path,
    image_ids: list[str],
    target_size: int,
) -> tuple[dict[str, list[Detection]], list[float], dict]:
    """One invocation of a command backend over a staged directory."""
    from .report import read_detections

    with tempfile.TemporaryDirectory(prefix="detbench-out-") as tmp:
        dets_path = Path(tmp) / "detections.jsonl"
        timing_path = Path(tmp) / "timing.json"
        argv = [str(a) for a in backend.config["argv"]] + [
            "--images", str(stage_dir),
            "--out", str(dets_path),
            "--timing", str(timing_path),
            "--imgsz", str(target_size),
        ]
        try:
            proc = subprocess.run(argv, capture_output=True, text=True)
        except OSError as exc:
            raise BenchError(f"cannot launch backend {backend.name!r}: {exc}") from exc
        if proc.returncode != 0:
            raise BenchError(
                f"backend {backend.name!r} exited {proc.returncode}", stderr=proc.stderr
            )
        dets = read_detections(dets_path)
        try:
            timing = json.loads(timing_path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise BenchError(f"backend produced no usable timing file: {exc}") from exc

    per_image_ms = timing.get("per_image_ms")
    if not isinstance(per_image_ms, list) or not all(
        isinstance(v, (int, float)) and v >= 0 for v in per_image_ms
    ):
        raise BenchError("timing.json per_image_ms must be a list of non-negative numbers")
    if len(per_image_ms) != len(image_ids):
        raise BenchError(
            f"timing.json has {len(per_image_ms)} entries for {len(image_ids)} images"
        )
    stems = timing.get("images")
    if stems is not None:
        if sorted(stems) != sorted(image_ids):
            raise BenchError("timing.json images do not match the staged directory")
        order = {stem: ms for stem, ms in zip(stems, per_image_ms)}
        per_image_ms = [float(order[i]) for i in image_ids]
    else:
        per_image_ms = [float(v) for v in per_image_ms]

    by_image: dict[str, list[Detection]] = {i: [] for i in image_ids}
    for det in dets:
        if det.image_id not in by_image:
            raise BenchError(f"backend emitted unknown image id {det.image_id!r}")
        by_image[det.image_id].append(det)
    return by_image, per_image_ms, timing


def run_bench(
    backend: DetectorBackend,
    index: DatasetIndex,
    image_ids: list[str],
    target_size: int,
    warmup: int = 0,
    repeats: int = 1,
    confidence: float = DEFAULT_CONFIDENCE,
    nms_iou: float = DEFAULT_NMS_IOU,
    dataset_root: Path | str | None = None,
) -> BenchResult:
    """Wall-clock each stage per image, sequentially, excluding warmup.

    Means are over repeats x (n_images - warmup) samples; p50/p95 ride
    along for diagnostics. The detection data path is deterministic; only
    the clock readings vary between runs.
    """
    if repeats < 1:
        raise BenchError(f"repeats must be >= 1, got {repeats}")
    if not image_ids:
        raise BenchError("no images to benchmark")
    if warmup < 0:
        raise BenchError(f"warmup must be >= 0, got {warmup}")
    if warmup >= len(image_ids):
        raise BenchError(
            f"warmup {warmup} leaves no images to measure (n={len(image_ids)})"
        )
    if target_size <= 0:
        raise BenchError(f"target size must be positive, got {target_size}")

    ids = sorted(image_ids)
    records = {i: index.record(i) for i in ids}

    warnings: list[str] = []
    resolution = time.get_clock_info("perf_counter").resolution
    if resolution > 1e-6:
        warnings.append(
            f"perf_counter resolution {resolution:.2e}s is coarser than 1 microsecond"
        )

    stage_dir_ctx = None
    stage_dir = None
    if backend.kind == "command":
        if dataset_root is None:
            raise BenchError("command backends need dataset_root to stage images")
        paths = _find_image_paths(Path(dataset_root))
        missing = [i for i in ids if i not in paths]
        if missing:
            raise BenchError(f"images missing on disk: {missing[:5]}")
        stage_dir_ctx = tempfile.TemporaryDirectory(prefix="detbench-stage-")
        stage_dir = Path(stage_dir_ctx.name)
        for i in ids:
            target = stage_dir / paths[i].name
            try:
                target.symlink_to(paths[i].resolve())
            except OSError:
                target.write_bytes(paths[i].read_bytes())

    pre_samples: list[float] = []
    inf_samples: list[float] = []
    post_samples: list[float] = []
    first_dets: list[Detection] | None = None
    transforms: list[dict] = []

    try:
        for repeat in range(repeats):
            repeat_dets: list[Detection] = []
            repeat_pre: list[float] = []
            repeat_inf: list[float] = []
            repeat_post: list[float] = []

            command_result = None
            if backend.kind == "command":
                command_result = _run_command_backend(backend, stage_dir, ids, target_size)

            for pos, image_id in enumerate(ids):
                record = records[image_id]
                t0 = time.perf_counter_ns()
                transform = letterbox(record.width, record.height, target_size)
                t1 = time.perf_counter_ns()
                if backend.kind == "oracle":
                    raw = oracle_detect(
                        index,
                        image_id,
                        backend.config.get("noise", NoiseModel()),
                        backend.config.get("seed", 0),
                    )
                    t2 = time.perf_counter_ns()
                    inf_ms = (t2 - t1) / 1e6
                else:
                    by_image, per_image_ms, _ = command_result
                    raw = by_image[image_id]
                    inf_ms = per_image_ms[pos]
                    t2 = time.perf_counter_ns()
                final = postprocess_image(raw, confidence, nms_iou)
                t3 = time.perf_counter_ns()

                repeat_pre.append((t1 - t0) / 1e6)
                repeat_inf.append(inf_ms)
                repeat_post.append((t3 - t2) / 1e6)
                repeat_dets.extend(final)
                if repeat == 0:
                    transforms.append({"image": image_id, **transform.to_dict()})

            pre_samples.extend(repeat_pre[warmup:])
            inf_samples.extend(repeat_inf[warmup:])
            post_samples.extend(repeat_post[warmup:])
            if first_dets is None:
                first_dets = repeat_dets
    finally:
        if stage_dir_ctx is not None:
            stage_dir_ctx.cleanup()

    def mean(values: list[float]) -> float:
        return math.fsum(values) / len(values)

    breakdown = TimingBreakdown.from_stage_means(
        mean(pre_samples),
        mean(inf_samples),
        mean(post_samples),
        n_images=len(ids),
        n_warmup=warmup,
    )
    percentiles = {
        name: {
            "p50": float(np.percentile(samples, 50)),
            "p95": float(np.percentile(samples, 95)),
        }
        for name, samples in (
            ("preprocess_ms", pre_samples),
            ("inference_ms", inf_samples),
            ("postprocess_ms", post_samples),
        )
    }
    return BenchResult(
        breakdown=breakdown,
        percentiles=percentiles,
        warnings=warnings,
        detections=first_dets or [],
        transforms=transforms,
        backend=backend.name,
        target_size=target_size,
        repeats=repeats,
    )


def bench_result_to_json(result: BenchResult) -> dict:
    b = result.breakdown
    return {
        "breakdown": {
            "preprocess_ms": b.preprocess_ms,
            "inference_ms": b.inference_ms,
            "postprocess_ms": b.postprocess_ms,
            "total_ms": b.total_ms,
            "n_images": b.n_images,
            "n_warmup": b.n_warmup,
        },
        "percentiles": result.percentiles,
        "warnings": list(result.warnings),
        "backend": result.backend,
        "imgsz": result.target_size,
        "repeats": result.repeats,
        "n_detections": len(result.detections),
        "transforms": result.transforms,
    }
