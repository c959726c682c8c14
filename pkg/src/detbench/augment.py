"""Contrast/luminance augmentation with bit-exact saturating 8-bit arithmetic.

The photometric transform is out = clamp(rint(alpha*a + beta*b + gamma)),
rint rounding half to even. The rounding rule is locked and tested; labels
are never touched. Augmented copies extend the train subset only and are
materialized on disk next to the originals with an ``_augK`` stem suffix.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import kernels
from .dataset import DatasetIndex, ImageRecord, SplitAssignment
from .errors import AugmentError


@dataclass(frozen=True)
class AugmentParams:
    """alpha scales contrast, beta weighs a second source, gamma shifts luminance."""

    alpha: float
    beta: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        for name, value in (("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)):
            if not math.isfinite(value):
                raise AugmentError(f"{name} must be finite, got {value!r}")
        if self.alpha <= 0:
            raise AugmentError(f"alpha must be positive, got {self.alpha!r}")

    @classmethod
    def from_dict(cls, obj: dict) -> "AugmentParams":
        unknown = set(obj) - {"alpha", "beta", "gamma"}
        if unknown:
            raise AugmentError(f"unknown augmentation keys: {sorted(unknown)}")
        if "alpha" not in obj:
            raise AugmentError(f"augmentation entry missing alpha: {obj!r}")
        return cls(
            alpha=float(obj["alpha"]),
            beta=float(obj.get("beta", 0.0)),
            gamma=float(obj.get("gamma", 0.0)),
        )


def load_manifest(path: Path | str) -> list[AugmentParams]:
    """Augmentation manifest: a JSON list of {alpha, beta?, gamma?} objects."""
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise AugmentError(f"cannot read manifest {path}: {exc}") from exc
    if not isinstance(data, list) or not data:
        raise AugmentError(f"{path}: manifest must be a non-empty JSON list")
    return [AugmentParams.from_dict(entry) for entry in data]


@dataclass(frozen=True)
class ImageBuffer:
    """Row-major 8-bit image, 1 or 3 channels, stored as (h, w, c) uint8."""

    pixels: np.ndarray = field(compare=False)

    def __post_init__(self):
        p = self.pixels
        if not isinstance(p, np.ndarray) or p.dtype != np.uint8 or p.ndim != 3:
            raise AugmentError("pixels must be a (h, w, c) uint8 array")
        if p.shape[2] not in (1, 3):
            raise AugmentError(f"channels must be 1 or 3, got {p.shape[2]}")
        if p.shape[0] < 1 or p.shape[1] < 1:
            raise AugmentError(f"empty image {p.shape}")
        if not p.flags.c_contiguous:
            object.__setattr__(self, "pixels", np.ascontiguousarray(p))

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def channels(self) -> int:
        return self.pixels.shape[2]

    @property
    def data(self) -> bytes:
        return self.pixels.tobytes()

    def same_shape(self, other: "ImageBuffer") -> bool:
        return self.pixels.shape == other.pixels.shape

    @classmethod
    def from_file(cls, path: Path | str) -> "ImageBuffer":
        from PIL import Image

        with Image.open(path) as img:
            if img.mode not in ("L", "RGB"):
                img = img.convert("RGB" if img.mode in ("RGBA", "P", "CMYK") else "L")
            arr = np.asarray(img, dtype=np.uint8)
        if arr.ndim == 2:
            arr = arr[:, :, None]
        return cls(pixels=arr)

    def to_file(self, path: Path | str) -> None:
        from PIL import Image

        arr = self.pixels[:, :, 0] if self.channels == 1 else self.pixels
        Image.fromarray(arr, mode="L" if self.channels == 1 else "RGB").save(path)


def weighted_blend(
    a: ImageBuffer, alpha: float, b: ImageBuffer, beta: float, gamma: float
) -> ImageBuffer:
    """Saturating weighted sum of two equally-shaped buffers."""
    if not a.same_shape(b):
        raise AugmentError(
            f"dimension mismatch: {a.pixels.shape} vs {b.pixels.shape}"
        )
    for name, value in (("alpha", alpha), ("beta", beta), ("gamma", gamma)):
        if not math.isfinite(value):
            raise AugmentError(f"{name} must be finite, got {value!r}")
    out = kernels.blend_u8(a.pixels, b.pixels, float(alpha), float(beta), float(gamma))
    return ImageBuffer(pixels=out)


def adjust_contrast_luminance(img: ImageBuffer, alpha: float, gamma: float) -> ImageBuffer:
    """Single-image contrast/luminance adjustment; annotations are unaffected."""
    if not math.isfinite(alpha) or alpha <= 0:
        raise AugmentError(f"alpha must be positive, got {alpha!r}")
    return weighted_blend(img, alpha, img, 0.0, gamma)


def apply_params(img: ImageBuffer, params: AugmentParams) -> ImageBuffer:
    """General form: blends the image with itself under (alpha, beta, gamma)."""
    return weighted_blend(img, params.alpha, img, params.beta, params.gamma)


@dataclass(frozen=True)
class AugmentLogRow:
    source_id: str
    new_id: str
    alpha: float
    beta: float
    gamma: float


@dataclass
class AugmentResult:
    """Extended dataset: new records, extended split, and the copy log."""

    index: DatasetIndex
    split: SplitAssignment
    log: list[AugmentLogRow]


def augment_split(
    index: DatasetIndex,
    split: SplitAssignment,
    params_list: list[AugmentParams],
    seed: int = 0,
) -> AugmentResult:
    """Extend the train subset with one copy per image per params entry.

    Copy K of image X is named ``X_augK`` (1-based) and stays in the train
    subset; labels are carried over verbatim; valid/test are untouched. The
    seed is accepted for interface stability but the photometric transforms
    are fully deterministic, so it is currently unused.
    """
    del seed
    if not params_list:
        raise AugmentError("params_list must not be empty")
    existing = set(index.image_ids)
    new_records: list[ImageRecord] = []
    new_assignment = dict(split.assignment)
    log: list[AugmentLogRow] = []
    for record in index.images:
        if split.assignment.get(record.image_id) != "train":
            continue
        for k, params in enumerate(params_list, start=1):
            new_id = f"{record.image_id}_aug{k}"
            if new_id in existing:
                raise AugmentError(f"augmented id collides with existing image: {new_id}")
            existing.add(new_id)
            annotations = tuple(
                replace(ann, image_id=new_id) for ann in record.annotations
            )
            new_records.append(
                ImageRecord(
                    image_id=new_id,
                    width=record.width,
                    height=record.height,
                    annotations=annotations,
                    patient_id=record.patient_id,
                )
            )
            new_assignment[new_id] = "train"
            log.append(
                AugmentLogRow(
                    source_id=record.image_id,
                    new_id=new_id,
                    alpha=params.alpha,
                    beta=params.beta,
                    gamma=params.gamma,
                )
            )
    extended = DatasetIndex(
        class_table=index.class_table, images=list(index.images) + new_records
    )
    new_split = SplitAssignment(
        ratios=split.ratios, seed=split.seed, assignment=new_assignment
    )
    return AugmentResult(index=extended, split=new_split, log=log)


def write_augmented_files(
    root: Path | str, params_list: list[AugmentParams], log: list[AugmentLogRow]
) -> None:
    """Materialize augmented copies on disk.

    Each new image is written beside its source (same directory, same
    extension); the source's label file, when present, is copied byte for
    byte. Also writes ``augment_log.csv`` at the root.
    """
    root = Path(root)
    images_dir = root / "images"
    labels_dir = root / "labels"
    by_stem: dict[str, Path] = {}
    for path in sorted(images_dir.rglob("*")):
        if path.is_file() and path.suffix.lower() in (".png", ".jpg", ".jpeg", ".bmp"):
            by_stem[path.stem] = path
    params_by_k = {k: p for k, p in enumerate(params_list, start=1)}

    for row in log:
        source_path = by_stem.get(row.source_id)
        if source_path is None:
            raise AugmentError(f"source image not found on disk: {row.source_id}")
        k = int(row.new_id.rsplit("_aug", 1)[1])
        params = params_by_k[k]
        buffer = ImageBuffer.from_file(source_path)
        out = apply_params(buffer, params)
        out.to_file(source_path.with_name(f"{row.new_id}{source_path.suffix}"))
        label_path = labels_dir / f"{row.source_id}.txt"
        if label_path.is_file():
            (labels_dir / f"{row.new_id}.txt").write_bytes(label_path.read_bytes())

    log_path = root / "augment_log.csv"
    with log_path.open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["source_id", "new_id", "alpha", "beta", "gamma"])
        for row in log:
            writer.writerow([row.source_id, row.new_id, row.alpha, row.beta, row.gamma])
