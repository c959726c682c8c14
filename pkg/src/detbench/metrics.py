"""Accuracy metrics: per-class AP over IoU 0.50:0.05:0.95, mAP 50,
mAP 50-95, and the best-F1 confidence sweep.

Matching is the standard greedy protocol: detections in canonical score
order each take the unmatched same-class ground truth with the highest IoU,
provided that IoU reaches the threshold. AP is 101-point interpolated with
a monotone precision envelope; a non-empty detection list contributes an
implicit curve start at (recall 0, precision 1) - accepting nothing yields
no false positives - while a class with no detections scores 0. Published
tables rarely state which AP variant they used, so absolute agreement with
other tooling is only expected to about one mAP point.

F1 is macro-averaged: per-class F1 at one global confidence cutoff, the
mean maximized over a fixed 1000-point grid. Classes without ground truth
in the evaluated subset are excluded from every mean.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .dataset import Annotation, BBox, DatasetIndex
from .errors import MetricsError
from .postprocess import Detection, detection_sort_key

RECALL_SAMPLES = np.arange(101, dtype=np.float64) / 100.0
F1_GRID_SIZE = 1000


@dataclass(frozen=True)
class IoUThresholdGrid:
    """The 10 matching thresholds 0.50, 0.55, ..., 0.95."""

    thresholds: tuple[float, ...]

    def __post_init__(self):
        t = self.thresholds
        if len(t) != 10:
            raise MetricsError(f"grid must have 10 thresholds, got {len(t)}")
        if abs(t[0] - 0.50) > 1e-12 or abs(t[-1] - 0.95) > 1e-12:
            raise MetricsError(f"grid must span 0.50..0.95, got {t[0]}..{t[-1]}")
        for lo, hi in zip(t, t[1:]):
            if not lo < hi or abs((hi - lo) - 0.05) > 1e-12:
                raise MetricsError(f"grid step must be 0.05, got {hi - lo}")

    def __len__(self) -> int:
        return len(self.thresholds)

    @classmethod
    def coco(cls) -> "IoUThresholdGrid":
        return cls(tuple((50 + 5 * k) / 100.0 for k in range(10)))


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union; 0 when the union is empty."""
    ix1 = max(a.x1, b.x1)
    iy1 = max(a.y1, b.y1)
    ix2 = min(a.x2, b.x2)
    iy2 = min(a.y2, b.y2)
    inter = max(ix2 - ix1, 0.0) * max(iy2 - iy1, 0.0)
    union = (a.area + b.area) - inter
    if union <= 0.0:
        return 0.0
    return inter / union


@dataclass(frozen=True)
class ClassMatches:
    """Matching outcome for one (image, class): detections in canonical
    order and, per threshold, the ground-truth index each one claimed."""

    class_id: int
    detections: tuple[Detection, ...]
    matched_gt: np.ndarray = field(compare=False)  # (T, D) int32, -1 = unmatched
    gt_count: int = 0


@dataclass(frozen=True)
class MatchResult:
    image_id: str
    grid: IoUThresholdGrid
    by_class: dict[int, ClassMatches] = field(compare=False)

    @property
    def gt_counts(self) -> dict[int, int]:
        return {c: m.gt_count for c, m in self.by_class.items() if m.gt_count}


def match_detections(
    gts: list[Annotation] | tuple[Annotation, ...],
    dets: list[Detection],
    grid: IoUThresholdGrid | None = None,
) -> MatchResult:
    """Greedy per-image matching at every grid threshold."""
    grid = grid or IoUThresholdGrid.coco()
    ids = {g.image_id for g in gts} | {d.image_id for d in dets}
    if len(ids) > 1:
        raise MetricsError(f"match_detections expects one image, got {sorted(ids)}")
    image_id = next(iter(ids), "")
    thresholds = np.asarray(grid.thresholds, dtype=np.float64)

    by_class: dict[int, ClassMatches] = {}
    class_ids = sorted({g.class_id for g in gts} | {d.class_id for d in dets})
    for class_id in class_ids:
        class_gts = [g for g in gts if g.class_id == class_id]
        class_dets = sorted(
            (d for d in dets if d.class_id == class_id), key=detection_sort_key
        )
        det_boxes = np.array(
            [d.box.as_tuple() for d in class_dets], dtype=np.float64
        ).reshape(len(class_dets), 4)
        gt_boxes = np.array(
            [g.box.as_tuple() for g in class_gts], dtype=np.float64
        ).reshape(len(class_gts), 4)
        ious = kernels.iou_matrix(det_boxes, gt_boxes)
        matched = kernels.match_greedy(ious, thresholds)
        by_class[class_id] = ClassMatches(
            class_id=class_id,
            detections=tuple(class_dets),
            matched_gt=matched,
            gt_count=len(class_gts),
        )
    return MatchResult(image_id=image_id, grid=grid, by_class=by_class)


def average_precision(
    scores: np.ndarray, matched: np.ndarray, gt_count: int
) -> float:
    """101-point interpolated AP for one class at one threshold.

    ``scores`` must be in canonical descending order with ``matched`` flags
    aligned; ``gt_count`` >= 1.
    """
    if gt_count < 1:
        raise MetricsError("average_precision needs at least one ground truth")
    scores = np.asarray(scores, dtype=np.float64)
    matched = np.asarray(matched, dtype=bool)
    n = len(scores)
    if n == 0:
        return 0.0
    tp = np.cumsum(matched, dtype=np.float64)
    ranks = np.arange(1, n + 1, dtype=np.float64)
    recalls = np.concatenate(([0.0], tp / float(gt_count)))
    precisions = np.concatenate(([1.0], tp / ranks))
    envelope = np.maximum.accumulate(precisions[::-1])[::-1]
    idx = np.searchsorted(recalls, RECALL_SAMPLES, side="left")
    inside = idx < len(recalls)
    values = np.where(inside, envelope[np.minimum(idx, len(recalls) - 1)], 0.0)
    return float(values.sum()) / 101.0


def f1_sweep(
    class_records: dict[int, tuple[np.ndarray, np.ndarray]],
    gt_counts: dict[int, int],
    n_cutoffs: int = F1_GRID_SIZE,
) -> tuple[float, float]:
    """Best macro F1 over the cutoff grid k/n_cutoffs, k = 1..n_cutoffs.

    ``class_records[class_id]`` is (scores, matched_at_0.50); only classes
    with ground truth participate. Ties resolve to the smallest cutoff.
    """
    included = sorted(c for c, n in gt_counts.items() if n >= 1)
    if not included:
        raise MetricsError("f1 sweep needs at least one ground truth")
    cutoffs = np.arange(1, n_cutoffs + 1, dtype=np.float64) / float(n_cutoffs)
    total = np.zeros(n_cutoffs, dtype=np.float64)
    empty = np.zeros(0, dtype=np.float64)
    for class_id in included:
        scores, matched = class_records.get(class_id, (empty, empty.astype(bool)))
        ascending = np.sort(np.asarray(scores, dtype=np.float64))
        tp_scores = np.sort(np.asarray(scores, dtype=np.float64)[np.asarray(matched, dtype=bool)])
        kept = len(ascending) - np.searchsorted(ascending, cutoffs, side="left")
        tp = (len(tp_scores) - np.searchsorted(tp_scores, cutoffs, side="left")).astype(
            np.float64
        )
        precision = np.zeros(n_cutoffs, dtype=np.float64)
        np.divide(tp, kept, out=precision, where=kept > 0)
        recall = tp / float(gt_counts[class_id])
        denom = precision + recall
        f1 = np.zeros(n_cutoffs, dtype=np.float64)
        np.divide(2.0 * precision * recall, denom, out=f1, where=denom > 0.0)
        total += f1
    mean = total / float(len(included))
    best = int(np.argmax(mean))  # first max = smallest cutoff on ties
    return float(mean[best]), float(cutoffs[best])


@dataclass(frozen=True)
class EvalCounts:
    images: int
    ground_truths: int
    detections: int


@dataclass(frozen=True)
class EvalReport:
    """Everything the accuracy columns need, as fractions in [0, 1]."""

    grid: IoUThresholdGrid
    per_class_ap: dict[int, tuple[float, ...]] = field(compare=False)
    map50: float = 0.0
    map5095: float = 0.0
    f1_best: float = 0.0
    f1_best_confidence: float = 0.0
    counts: EvalCounts = EvalCounts(0, 0, 0)

    def __post_init__(self):
        for name in ("map50", "map5095", "f1_best", "f1_best_confidence"):
            value = getattr(self, name)
            if not math.isfinite(value) or not 0.0 <= value <= 1.0:
                raise MetricsError(f"{name} must be in [0, 1], got {value!r}")
        if self.map5095 > self.map50 + 1e-12:
            raise MetricsError(
                f"mAP 50-95 ({self.map5095}) cannot exceed mAP 50 ({self.map50})"
            )
        for class_id, aps in self.per_class_ap.items():
            if len(aps) != len(self.grid):
                raise MetricsError(f"class {class_id}: expected {len(self.grid)} APs")
            if any(not 0.0 <= a <= 1.0 for a in aps):
                raise MetricsError(f"class {class_id}: AP outside [0, 1]")


def evaluate(
    index: DatasetIndex,
    subset: list[str],
    dets: list[Detection],
    grid: IoUThresholdGrid | None = None,
    n_cutoffs: int = F1_GRID_SIZE,
) -> EvalReport:
    """Score detections against the ground truth of a subset of images.

    Deterministic for fixed inputs: images aggregate in sorted-id order and
    detections in canonical content order, so results are independent of
    both input orderings.
    """
    grid = grid or IoUThresholdGrid.coco()
    subset_list = list(subset)
    if not subset_list:
        raise MetricsError("empty evaluation subset")
    if len(set(subset_list)) != len(subset_list):
        raise MetricsError("duplicate image ids in subset")
    for image_id in subset_list:
        index.record(image_id)  # raises DatasetError on unknown ids
    subset_set = set(subset_list)
    for det in dets:
        if det.image_id not in subset_set:
            raise MetricsError(
                f"detection references image outside subset: {det.image_id!r}"
            )
        if det.class_id >= len(index.class_table):
            raise MetricsError(
                f"detection class id {det.class_id} not in class table"
            )

    by_image: dict[str, list[Detection]] = defaultdict(list)
    for det in dets:
        by_image[det.image_id].append(det)

    gt_counts: dict[int, int] = defaultdict(int)
    entries: dict[int, list] = defaultdict(list)
    for image_id in sorted(subset_list):
        record = index.record(image_id)
        result = match_detections(
            list(record.annotations), by_image.get(image_id, []), grid
        )
        for class_id, cm in result.by_class.items():
            gt_counts[class_id] += cm.gt_count
            flags = cm.matched_gt >= 0  # (T, D)
            for local, det in enumerate(cm.detections):
                entries[class_id].append(
                    (detection_sort_key(det), det.score, flags[:, local])
                )

    total_gt = sum(gt_counts.values())
    if total_gt == 0:
        raise MetricsError("subset has no ground truth; metrics are undefined")

    included = sorted(c for c, n in gt_counts.items() if n >= 1)
    per_class_ap: dict[int, tuple[float, ...]] = {}
    f1_records: dict[int, tuple[np.ndarray, np.ndarray]] = {}
    for class_id in included:
        rows = entries.get(class_id, [])
        rows.sort(key=lambda e: e[0])  # stable: duplicates keep image order
        scores = np.array([r[1] for r in rows], dtype=np.float64)
        flag_matrix = (
            np.stack([r[2] for r in rows], axis=1)
            if rows
            else np.zeros((len(grid), 0), dtype=bool)
        )
        per_class_ap[class_id] = tuple(
            average_precision(scores, flag_matrix[ti], gt_counts[class_id])
            for ti in range(len(grid))
        )
        f1_records[class_id] = (scores, flag_matrix[0])

    map50 = sum(per_class_ap[c][0] for c in included) / len(included)
    map5095 = sum(sum(per_class_ap[c]) / len(grid) for c in included) / len(included)
    f1_best, f1_conf = f1_sweep(f1_records, dict(gt_counts), n_cutoffs)

    counts = EvalCounts(
        images=len(subset_list),
        ground_truths=total_gt,
        detections=len(dets),
    )
    return EvalReport(
        grid=grid,
        per_class_ap=per_class_ap,
        map50=map50,
        map5095=map5095,
        f1_best=f1_best,
        f1_best_confidence=f1_conf,
        counts=counts,
    )
