"""Comparison tables, scatter data, training-config emission, and the
file formats that tie the pipeline together.

Detections interchange (dets-v1) is JSON Lines: a header object
``{"format": "dets-v1"}`` followed by one object per detection:
``{"image": stem, "class_id": int, "bbox": [x1, y1, x2, y2], "score": f}``
with the box in original-image pixels, so scoring never depends on the
letterbox a backend used.

Params/FLOPs of neural models cannot be computed for black-box detectors;
they arrive as pass-through metadata rows in a models.json file.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, fields
from pathlib import Path

from .dataset import BBox, ClassTable
from .errors import ReportError
from .metrics import EvalReport
from .postprocess import Detection

DETS_FORMAT_NAME = "dets-v1"

TABLE_COLUMNS = (
    "Model",
    "Params (M)",
    "FLOPs (G)",
    "F1 (%)",
    "mAP 50 (%)",
    "mAP 50-95 (%)",
    "Speed (ms)",
)


@dataclass(frozen=True)
class ModelRow:
    """One comparison-table row; accuracy columns are percentages."""

    model_name: str
    params_millions: float
    flops_g: float
    f1_pct: float
    map50_pct: float
    map5095_pct: float
    speed_ms: float
    input_size: int

    def __post_init__(self):
        for name in ("f1_pct", "map50_pct", "map5095_pct"):
            value = getattr(self, name)
            if not 0.0 <= value <= 100.0:
                raise ReportError(f"{name} must be in [0, 100], got {value!r}")
        for name in ("params_millions", "flops_g", "speed_ms"):
            if getattr(self, name) < 0:
                raise ReportError(f"{name} must be >= 0")
        if self.input_size <= 0:
            raise ReportError(f"input_size must be positive, got {self.input_size}")


def _round_half_away(value: float) -> int:
    if value < 0:
        raise ReportError(f"negative percentage {value!r}")
    return math.floor(value + 0.5)


def _row_cells(row: ModelRow) -> tuple[str, ...]:
    return (
        row.model_name,
        f"{row.params_millions:.2f}",
        f"{row.flops_g:.1f}",
        str(_round_half_away(row.f1_pct)),
        f"{row.map50_pct:.2f}",
        f"{row.map5095_pct:.2f}",
        f"{row.speed_ms:.1f}",
    )


def render_comparison_table(rows: list[ModelRow], format: str = "markdown") -> str:
    """Columns in the conventional order, mAP to 2 decimals, F1 to integer
    percent (half away from zero), row order as given."""
    if not rows:
        raise ReportError("cannot render an empty table")
    sizes = {r.input_size for r in rows}
    if len(sizes) > 1:
        raise ReportError(f"mixed input sizes in one table: {sorted(sizes)}")
    if format == "markdown":
        lines = [
            "| " + " | ".join(TABLE_COLUMNS) + " |",
            "| " + " | ".join("---" for _ in TABLE_COLUMNS) + " |",
        ]
        lines.extend("| " + " | ".join(_row_cells(r)) + " |" for r in rows)
        return "\n".join(lines) + "\n"
    if format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(TABLE_COLUMNS)
        for row in rows:
            writer.writerow(_row_cells(row))
        return buf.getvalue()
    raise ReportError(f"unknown table format {format!r}")


def parse_comparison_table(text: str, input_size: int, format: str = "csv") -> list[ModelRow]:
    """Inverse of render_comparison_table up to the printed precision."""
    if format == "csv":
        reader = csv.reader(io.StringIO(text))
        rows = [r for r in reader if r]
        header, body = rows[0], rows[1:]
    elif format == "markdown":
        lines = [l for l in text.splitlines() if l.strip()]
        cells = [[c.strip() for c in line.strip().strip("|").split("|")] for line in lines]
        header, body = cells[0], [r for r in cells[1:] if set("".join(r)) != {"-"}]
    else:
        raise ReportError(f"unknown table format {format!r}")
    if tuple(header) != TABLE_COLUMNS:
        raise ReportError(f"unexpected table header {header!r}")
    out = []
    for cells_ in body:
        if len(cells_) != len(TABLE_COLUMNS):
            raise ReportError(f"bad table row {cells_!r}")
        out.append(
            ModelRow(
                model_name=cells_[0],
                params_millions=float(cells_[1]),
                flops_g=float(cells_[2]),
                f1_pct=float(cells_[3]),
                map50_pct=float(cells_[4]),
                map5095_pct=float(cells_[5]),
                speed_ms=float(cells_[6]),
                input_size=input_size,
            )
        )
    return out


def scatter_data(rows: list[ModelRow], x_field: str, y_field: str) -> str:
    """CSV of (label, x, y) points for external plotting; axes are caller's
    choice since no single pair is canonical."""
    numeric = {f.name for f in fields(ModelRow)} - {"model_name"}
    for name in (x_field, y_field):
        if name not in numeric:
            raise ReportError(f"unknown scatter field {name!r} (choose from {sorted(numeric)})")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["model", x_field, y_field])
    for row in rows:
        writer.writerow([row.model_name, getattr(row, x_field), getattr(row, y_field)])
    return buf.getvalue()


def load_model_rows(path: Path | str) -> list[ModelRow]:
    path = Path(path)
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ReportError(f"cannot read models file {path}: {exc}") from exc
    if not isinstance(data, list):
        raise ReportError(f"{path}: models file must be a JSON list")
    rows = []
    for i, obj in enumerate(data):
        try:
            rows.append(
                ModelRow(
                    model_name=str(obj["model"]),
                    params_millions=float(obj["params_millions"]),
                    flops_g=float(obj["flops_g"]),
                    f1_pct=float(obj["f1_pct"]),
                    map50_pct=float(obj["map50_pct"]),
                    map5095_pct=float(obj["map5095_pct"]),
                    speed_ms=float(obj["speed_ms"]),
                    input_size=int(obj["input_size"]),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ReportError(f"{path}: bad model entry #{i}: {exc}") from exc
    return rows


def bundled_models_path() -> Path:
    """The shipped comparison fixture (published metadata for 16 model rows)."""
    from importlib import resources

    return Path(str(resources.files("detbench").joinpath("data/models.json")))


@dataclass(frozen=True)
class TrainingConfig:
    """Hyperparameters handed to an external trainer, key=value on disk."""

    optimizer: str = "sgd"
    initial_lr: float = 0.01
    momentum: float = 0.937
    weight_decay: float = 0.0005
    epochs: int = 100
    batch_size: int = 16
    image_size: int = 640
    pretrained_weights: str = "coco_pretrained.pt"

    def __post_init__(self):
        for name in ("initial_lr", "momentum", "weight_decay", "epochs", "batch_size", "image_size"):
            value = getattr(self, name)
            if not value > 0:
                raise ReportError(f"training config {name} must be positive, got {value!r}")

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            lines.append(f"{f.name}={value!r}" if isinstance(value, float) else f"{f.name}={value}")
        return "\n".join(lines) + "\n"


_TRAINING_TYPES = {
    "optimizer": str,
    "initial_lr": float,
    "momentum": float,
    "weight_decay": float,
    "epochs": int,
    "batch_size": int,
    "image_size": int,
    "pretrained_weights": str,
}


def emit_training_config(
    path: Path | str, overrides: dict | None = None
) -> TrainingConfig:
    """Write the training-config file; defaults are the published recipe
    (SGD, lr 1e-2, momentum 0.937, weight decay 5e-4, 100 epochs, batch 16)."""
    values: dict = {}
    for key, raw in (overrides or {}).items():
        if key not in _TRAINING_TYPES:
            raise ReportError(f"unknown training config key {key!r}")
        try:
            values[key] = _TRAINING_TYPES[key](raw)
        except (TypeError, ValueError) as exc:
            raise ReportError(f"bad value for {key}: {raw!r} ({exc})") from None
    config = TrainingConfig(**values)
    Path(path).write_text(config.to_text(), encoding="utf-8")
    return config


def parse_training_config(path: Path | str) -> TrainingConfig:
    values: dict = {}
    for line_number, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ReportError(f"{path}:{line_number}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in _TRAINING_TYPES:
            raise ReportError(f"{path}:{line_number}: unknown key {key!r}")
        try:
            values[key] = _TRAINING_TYPES[key](value.strip())
        except ValueError as exc:
            raise ReportError(f"{path}:{line_number}: {exc}") from None
    return TrainingConfig(**values)


def write_detections(path: Path | str, dets: list[Detection]) -> None:
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps({"format": DETS_FORMAT_NAME}, separators=(",", ":")) + "\n")
        for det in dets:
            obj = {
                "image": det.image_id,
                "class_id": det.class_id,
                "bbox": list(det.box.as_tuple()),
                "score": det.score,
            }
            fh.write(json.dumps(obj, separators=(",", ":")) + "\n")


def read_detections(path: Path | str) -> list[Detection]:
    path = Path(path)
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise ReportError(f"cannot read detections {path}: {exc}") from exc
    if not lines:
        raise ReportError(f"{path}: empty file, expected a dets-v1 header")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise ReportError(f"{path}:1: bad header: {exc}") from None
    if not isinstance(header, dict) or header.get("format") != DETS_FORMAT_NAME:
        raise ReportError(
            f"{path}:1: expected header {{\"format\": \"{DETS_FORMAT_NAME}\"}}, got {lines[0]!r}"
        )
    dets = []
    for line_number, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
            bbox = obj["bbox"]
            if not isinstance(bbox, list) or len(bbox) != 4:
                raise ValueError(f"bbox must be a 4-list, got {bbox!r}")
            det = Detection(
                image_id=str(obj["image"]),
                class_id=int(obj["class_id"]),
                box=BBox(*(float(v) for v in bbox)),
                score=float(obj["score"]),
            )
        except Exception as exc:
            raise ReportError(f"{path}:{line_number}: bad detection: {exc}") from None
        dets.append(det)
    return dets


def validate_detections_file(path: Path | str) -> int:
    """dets-v1 schema checker: header plus per-line schema validation.
    Returns the number of detection lines."""
    from . import schemas

    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ReportError(f"{path}: empty file")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise ReportError(f"{path}:1: bad header: {exc}") from None
    if not isinstance(header, dict) or header.get("format") != DETS_FORMAT_NAME:
        raise ReportError(f"{path}:1: missing dets-v1 header")
    count = 0
    for line_number, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ReportError(f"{path}:{line_number}: bad JSON: {exc}") from None
        try:
            schemas.validate(obj, "dets_line.schema.json")
        except schemas.SchemaValidationError as exc:
            raise ReportError(f"{path}:{line_number}: {exc}") from None
        if obj["bbox"][0] > obj["bbox"][2] or obj["bbox"][1] > obj["bbox"][3]:
            raise ReportError(f"{path}:{line_number}: box corners out of order")
        count += 1
    return count


def report_to_json(report: EvalReport, class_table: ClassTable, config: dict) -> dict:
    per_class = {
        class_table.name_of(class_id): {"ap_per_threshold": list(aps)}
        for class_id, aps in sorted(report.per_class_ap.items())
    }
    return {
        "map50": report.map50,
        "map5095": report.map5095,
        "f1_best": report.f1_best,
        "f1_confidence": report.f1_best_confidence,
        "per_class": per_class,
        "counts": {
            "images": report.counts.images,
            "ground_truths": report.counts.ground_truths,
            "detections": report.counts.detections,
        },
        "config": config,
    }


def write_report_json(
    path: Path | str, report: EvalReport, class_table: ClassTable, config: dict
) -> dict:
    obj = report_to_json(report, class_table, config)
    Path(path).write_text(
        json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return obj
