"""YOLO-format dataset ingestion, validation, and deterministic splitting.

Expected root layout::

    root/
      images/      image files, any nesting; stems must be unique
      labels/      one <stem>.txt per labeled image (YOLO lines)
      classes.txt  one class name per line, id = line index from 0
      meta.csv     optional: image_id,width,height,patient_id

Images without a label file are valid negative samples.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DatasetError, LabelParseError

SUBSETS = ("train", "valid", "test")
IMAGE_EXTENSIONS = (".png", ".jpg", ".jpeg", ".bmp")

# Denormalized corners may overshoot the image by at most this many pixels
# (float slack); they are clamped back. Anything larger is a bad label.
BOUNDS_TOLERANCE_PX = 1e-6


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box, absolute pixel corners. Degenerate (zero area) is legal."""

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x1, self.y1, self.x2, self.y2)):
            raise DatasetError(f"box coordinates must be finite: {self}")
        if self.x2 < self.x1 or self.y2 < self.y1:
            raise DatasetError(f"box corners out of order: {self}")

    @property
    def area(self) -> float:
        return (self.x2 - self.x1) * (self.y2 - self.y1)

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x1, self.y1, self.x2, self.y2)


@dataclass(frozen=True)
class ClassTable:
    """Ordered class names; a name's id is its zero-based position."""

    names: tuple[str, ...]

    def __post_init__(self):
        if not self.names:
            raise DatasetError("class table is empty")
        if any(not n for n in self.names):
            raise DatasetError("class names must be non-empty")
        if len(set(self.names)) != len(self.names):
            raise DatasetError("class names must be unique")

    def __len__(self) -> int:
        return len(self.names)

    def name_of(self, class_id: int) -> str:
        if not 0 <= class_id < len(self.names):
            raise DatasetError(f"class id {class_id} out of range (n={len(self.names)})")
        return self.names[class_id]

    @classmethod
    def from_file(cls, path: Path | str) -> "ClassTable":
        path = Path(path)
        if not path.is_file():
            raise DatasetError(f"missing class table: {path}")
        names = [line.strip() for line in path.read_text(encoding="utf-8").splitlines()]
        return cls(tuple(n for n in names if n))


@dataclass(frozen=True)
class Annotation:
    image_id: str
    class_id: int
    box: BBox


@dataclass(frozen=True)
class ImageRecord:
    image_id: str
    width: int
    height: int
    annotations: tuple[Annotation, ...] = ()
    patient_id: str | None = None

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise DatasetError(f"{self.image_id}: non-positive dimensions")


@dataclass
class DatasetIndex:
    """Validated inventory of images and their annotations."""

    class_table: ClassTable
    images: list[ImageRecord]

    def __post_init__(self):
        seen = set()
        for record in self.images:
            if record.image_id in seen:
                raise DatasetError(f"duplicate image id: {record.image_id}")
            seen.add(record.image_id)
            for ann in record.annotations:
                if ann.image_id != record.image_id:
                    raise DatasetError(
                        f"annotation bound to {ann.image_id!r} inside record {record.image_id!r}"
                    )
                if not 0 <= ann.class_id < len(self.class_table):
                    raise DatasetError(
                        f"{record.image_id}: class id {ann.class_id} not in class table"
                    )
        self._by_id = {r.image_id: r for r in self.images}

    def __len__(self) -> int:
        return len(self.images)

    @property
    def image_ids(self) -> list[str]:
        return [r.image_id for r in self.images]

    def record(self, image_id: str) -> ImageRecord:
        try:
            return self._by_id[image_id]
        except KeyError:
            raise DatasetError(f"unknown image id: {image_id}") from None

    def summary(self) -> dict:
        """Counts reported, never asserted: labeled-image and object totals
        in the wild are sometimes inconsistent with each other."""
        labeled = sum(1 for r in self.images if r.annotations)
        objects = sum(len(r.annotations) for r in self.images)
        return {
            "images": len(self.images),
            "labeled_images": labeled,
            "objects": objects,
            "classes": len(self.class_table),
        }


def parse_label_file(
    text: str,
    image_dims: tuple[int, int],
    image_id: str = "",
    path=None,
) -> list[Annotation]:
    """Parse YOLO label lines ``<class_id> <cx> <cy> <w> <h>`` (normalized).

    Corners are denormalized to absolute pixels: x1 = (cx - w/2) * width and
    so on. Lines are kept in file order; blank lines are skipped. Any
    malformed line (token count, non-numeric, value outside [0, 1], box
    outside the image beyond float slack) raises LabelParseError with its
    line number.
    """
    width, height = image_dims
    if width <= 0 or height <= 0:
        raise DatasetError(f"non-positive image dims {image_dims}")
    annotations = []
    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        tokens = line.split()
        if len(tokens) != 5:
            raise LabelParseError(
                f"expected 5 tokens, got {len(tokens)}", line_number, path
            )
        try:
            class_id = int(tokens[0])
        except ValueError:
            raise LabelParseError(
                f"class id {tokens[0]!r} is not an integer", line_number, path
            ) from None
        if class_id < 0:
            raise LabelParseError(f"negative class id {class_id}", line_number, path)
        try:
            cx, cy, w, h = (float(t) for t in tokens[1:])
        except ValueError:
            raise LabelParseError("non-numeric coordinate", line_number, path) from None
        for name, value in (("cx", cx), ("cy", cy), ("w", w), ("h", h)):
            if not math.isfinite(value) or not 0.0 <= value <= 1.0:
                raise LabelParseError(
                    f"{name}={value} outside [0, 1]", line_number, path
                )
        x1 = (cx - w / 2.0) * width
        y1 = (cy - h / 2.0) * height
        x2 = (cx + w / 2.0) * width
        y2 = (cy + h / 2.0) * height
        if (
            x1 < -BOUNDS_TOLERANCE_PX
            or y1 < -BOUNDS_TOLERANCE_PX
            or x2 > width + BOUNDS_TOLERANCE_PX
            or y2 > height + BOUNDS_TOLERANCE_PX
        ):
            raise LabelParseError(
                f"box ({x1}, {y1}, {x2}, {y2}) outside image {width}x{height}",
                line_number,
                path,
            )
        box = BBox(
            min(max(x1, 0.0), float(width)),
            min(max(y1, 0.0), float(height)),
            min(max(x2, 0.0), float(width)),
            min(max(y2, 0.0), float(height)),
        )
        annotations.append(Annotation(image_id=image_id, class_id=class_id, box=box))
    return annotations


def serialize_annotations(
    annotations: list[Annotation], image_dims: tuple[int, int]
) -> str:
    """Inverse of parse_label_file, full float precision, order preserved."""
    width, height = image_dims
    lines = []
    for ann in annotations:
        b = ann.box
        cx = (b.x1 + b.x2) / 2.0 / width
        cy = (b.y1 + b.y2) / 2.0 / height
        w = (b.x2 - b.x1) / width
        h = (b.y2 - b.y1) / height
        lines.append(f"{ann.class_id} {cx!r} {cy!r} {w!r} {h!r}")
    return "\n".join(lines) + ("\n" if lines else "")


def load_class_table(root: Path | str) -> ClassTable:
    return ClassTable.from_file(Path(root) / "classes.txt")


def load_dataset(root: Path | str, class_table: ClassTable | None = None) -> DatasetIndex:
    """Build a DatasetIndex from a dataset root.

    Dimensions come from meta.csv when present, otherwise from the image
    headers. Records are sorted by image id.
    """
    root = Path(root)
    images_dir = root / "images"
    if not images_dir.is_dir():
        raise DatasetError(f"missing images directory: {images_dir}")
    if class_table is None:
        class_table = load_class_table(root)

    found: dict[str, Path] = {}
    for path in sorted(images_dir.rglob("*")):
        if path.suffix.lower() not in IMAGE_EXTENSIONS or not path.is_file():
            continue
        stem = path.stem
        if stem in found:
            raise DatasetError(
                f"duplicate image stem {stem!r}: {found[stem]} and {path}"
            )
        found[stem] = path
    if not found:
        raise DatasetError(f"no images under {images_dir}")

    meta: dict[str, tuple[int, int, str | None]] = {}
    meta_path = root / "meta.csv"
    if meta_path.is_file():
        with meta_path.open(newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                try:
                    meta[row["image_id"]] = (
                        int(row["width"]),
                        int(row["height"]),
                        row.get("patient_id") or None,
                    )
                except (KeyError, ValueError) as exc:
                    raise DatasetError(f"bad meta.csv row {row}: {exc}") from None

    labels_dir = root / "labels"
    records = []
    for stem in sorted(found):
        path = found[stem]
        if stem in meta:
            width, height, patient_id = meta[stem]
        else:
            try:
                from PIL import Image

                with Image.open(path) as img:
                    width, height = img.size
            except Exception as exc:
                raise DatasetError(f"cannot read dimensions of {path}: {exc}") from exc
            patient_id = None
        label_path = labels_dir / f"{stem}.txt"
        annotations: tuple[Annotation, ...] = ()
        if label_path.is_file():
            try:
                text = label_path.read_text(encoding="utf-8")
            except OSError as exc:
                raise DatasetError(f"unreadable label file {label_path}: {exc}") from exc
            parsed = parse_label_file(text, (width, height), image_id=stem, path=label_path)
            for ann in parsed:
                if ann.class_id >= len(class_table):
                    raise DatasetError(
                        f"{label_path}: class id {ann.class_id} not in class table"
                    )
            annotations = tuple(parsed)
        records.append(
            ImageRecord(
                image_id=stem,
                width=width,
                height=height,
                annotations=annotations,
                patient_id=patient_id,
            )
        )
    return DatasetIndex(class_table=class_table, images=records)


class SplitMix64:
    """splitmix64 stream (Steele, Lea, Flood 2014), self-contained so split
    shuffles can never drift with a library upgrade."""

    _MASK = (1 << 64) - 1

    def __init__(self, seed: int):
        self._state = seed & self._MASK

    def next_u64(self) -> int:
        self._state = (self._state + 0x9E3779B97F4A7C15) & self._MASK
        z = self._state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & self._MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & self._MASK
        return z ^ (z >> 31)

    def below(self, bound: int) -> int:
        """Unbiased draw in [0, bound) by rejection."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        limit = ((1 << 64) // bound) * bound
        while True:
            v = self.next_u64()
            if v < limit:
                return v % bound


def _shuffle(items: list, rng: SplitMix64) -> None:
    """In-place Fisher-Yates, high index down."""
    for i in range(len(items) - 1, 0, -1):
        j = rng.below(i + 1)
        items[i], items[j] = items[j], items[i]


@dataclass(frozen=True)
class SplitAssignment:
    """Total train/valid/test partition of a dataset's image ids."""

    ratios: tuple[float, float, float]
    seed: int
    assignment: dict[str, str] = field(compare=False)

    def __post_init__(self):
        bad = {s for s in self.assignment.values() if s not in SUBSETS}
        if bad:
            raise DatasetError(f"unknown subset tags: {sorted(bad)}")

    def subset_ids(self, subset: str) -> list[str]:
        if subset not in SUBSETS:
            raise DatasetError(f"unknown subset {subset!r}")
        return sorted(i for i, s in self.assignment.items() if s == subset)

    def sizes(self) -> tuple[int, int, int]:
        counts = {s: 0 for s in SUBSETS}
        for s in self.assignment.values():
            counts[s] += 1
        return (counts["train"], counts["valid"], counts["test"])

    def to_csv(self, path: Path | str) -> None:
        path = Path(path)
        with path.open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["image_id", "subset"])
            for image_id in sorted(self.assignment):
                writer.writerow([image_id, self.assignment[image_id]])

    @classmethod
    def from_csv(
        cls, path: Path | str, ratios=(0.7, 0.2, 0.1), seed: int = 0
    ) -> "SplitAssignment":
        path = Path(path)
        if not path.is_file():
            raise DatasetError(f"missing split file: {path}")
        assignment = {}
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != ["image_id", "subset"]:
                raise DatasetError(f"{path}: expected header image_id,subset")
            for row in reader:
                if len(row) != 2:
                    raise DatasetError(f"{path}: bad row {row}")
                image_id, subset = row
                if subset not in SUBSETS:
                    raise DatasetError(f"{path}: unknown subset {subset!r}")
                if image_id in assignment:
                    raise DatasetError(f"{path}: duplicate image id {image_id!r}")
                assignment[image_id] = subset
        return cls(ratios=tuple(ratios), seed=seed, assignment=assignment)


def split_dataset(
    index: DatasetIndex,
    ratios: tuple[float, float, float] = (0.7, 0.2, 0.1),
    seed: int = 0,
    by_patient: bool = False,
) -> SplitAssignment:
    """Deterministic random partition into train/valid/test.

    Image ids are sorted, shuffled by a seeded splitmix64 Fisher-Yates, and
    cut at floor(r_train*N) / floor(r_valid*N); the remainder is the test
    set. Identical (index, ratios, seed) give an identical assignment on any
    platform.

    by_patient keeps all images of one patient in one subset (leakage
    guard); subset sizes are then only approximate. Images without a
    patient id form their own singleton groups.
    """
    if len(index) == 0:
        raise DatasetError("cannot split an empty dataset")
    if len(ratios) != 3 or any(r < 0 for r in ratios):
        raise DatasetError(f"ratios must be 3 non-negative numbers, got {ratios!r}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise DatasetError(f"ratios must sum to 1, got {sum(ratios)!r}")

    n = len(index)
    n_train = math.floor(ratios[0] * n)
    n_valid = math.floor(ratios[1] * n)
    rng = SplitMix64(seed)
    assignment: dict[str, str] = {}

    if by_patient:
        groups: dict[str, list[str]] = {}
        for record in index.images:
            key = record.patient_id or f"__image__{record.image_id}"
            groups.setdefault(key, []).append(record.image_id)
        keys = sorted(groups)
        _shuffle(keys, rng)
        placed = 0
        for key in keys:
            members = groups[key]
            if placed < n_train:
                subset = "train"
            elif placed < n_train + n_valid:
                subset = "valid"
            else:
                subset = "test"
            for image_id in members:
                assignment[image_id] = subset
            placed += len(members)
    else:
        ids = sorted(index.image_ids)
        _shuffle(ids, rng)
        for pos, image_id in enumerate(ids):
            if pos < n_train:
                assignment[image_id] = "train"
            elif pos < n_train + n_valid:
                assignment[image_id] = "valid"
            else:
                assignment[image_id] = "test"

    return SplitAssignment(ratios=tuple(ratios), seed=seed, assignment=assignment)
