"""Confidence filtering and class-wise greedy NMS.

Detections carry a canonical total order (score descending, then image id,
class id, box corners) so every downstream result is independent of input
ordering. Evaluation defaults are a low confidence floor (0.001) and NMS
IoU 0.45; both are conventions, not published values, and both are CLI
flags.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .dataset import BBox
from .errors import PostprocessError

DEFAULT_CONFIDENCE = 0.001
DEFAULT_NMS_IOU = 0.45


@dataclass(frozen=True)
class Detection:
    """One detector output in original-image pixel space."""

    image_id: str
    class_id: int
    box: BBox
    score: float

    def __post_init__(self):
        if not math.isfinite(self.score) or not 0.0 <= self.score <= 1.0:
            raise PostprocessError(f"score must be in [0, 1], got {self.score!r}")
        if self.class_id < 0:
            raise PostprocessError(f"negative class id {self.class_id}")


def detection_sort_key(det: Detection):
    """Content-only total order: score desc, image id, class id, corners.

    Insertion order never participates, which is what makes NMS and the
    metrics permutation invariant.
    """
    b = det.box
    return (-det.score, det.image_id, det.class_id, b.x1, b.y1, b.x2, b.y2)


def filter_by_confidence(dets: list[Detection], threshold: float) -> list[Detection]:
    """Keep detections with score >= threshold, input order preserved."""
    if not 0.0 <= threshold <= 1.0:
        raise PostprocessError(f"confidence threshold must be in [0, 1], got {threshold!r}")
    return [d for d in dets if d.score >= threshold]


def nms_classwise(dets: list[Detection], iou_threshold: float) -> list[Detection]:
    """Greedy hard NMS, each class independently, one image at a time.

    Within a class, detections are visited in canonical order and kept iff
    their IoU with every already-kept detection of that class is strictly
    below the threshold. Output is in canonical (score descending) order.
    """
    if not 0.0 <= iou_threshold <= 1.0:
        raise PostprocessError(f"iou threshold must be in [0, 1], got {iou_threshold!r}")
    if not dets:
        return []
    image_ids = {d.image_id for d in dets}
    if len(image_ids) > 1:
        raise PostprocessError(
            f"nms_classwise expects one image, got {sorted(image_ids)}"
        )
    kept: list[Detection] = []
    for class_id in sorted({d.class_id for d in dets}):
        class_dets = sorted(
            (d for d in dets if d.class_id == class_id), key=detection_sort_key
        )
        boxes = np.array([d.box.as_tuple() for d in class_dets], dtype=np.float64)
        mask = kernels.nms_keep(boxes, float(iou_threshold))
        kept.extend(d for d, keep in zip(class_dets, mask) if keep)
    kept.sort(key=detection_sort_key)
    return kept


def postprocess_image(
    dets: list[Detection],
    confidence: float = DEFAULT_CONFIDENCE,
    iou_threshold: float = DEFAULT_NMS_IOU,
) -> list[Detection]:
    """Standard per-image chain: confidence filter, then class-wise NMS."""
    return nms_classwise(filter_by_confidence(dets, confidence), iou_threshold)
