"""Pure-numpy kernel fallback.

Semantics here are the reference; the compiled extension must agree
bit-for-bit (same IEEE operation order, round-half-to-even), which the
kernel test suite enforces pairwise.
"""

from __future__ import annotations

import numpy as np


def blend_u8(
    a: np.ndarray, b: np.ndarray, alpha: float, beta: float, gamma: float
) -> np.ndarray:
    """Saturating per-sample weighted sum on 8-bit buffers.

    out = clamp(rint(alpha*a + beta*b + gamma), 0, 255), rint being
    round-half-to-even.
    """
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    acc = a.astype(np.float64) * float(alpha)
    acc += b.astype(np.float64) * float(beta)
    acc += float(gamma)
    np.rint(acc, out=acc)
    np.clip(acc, 0.0, 255.0, out=acc)
    return acc.astype(np.uint8)


def iou_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise IoU of (N, 4) x (M, 4) corner boxes; 0 where the union is 0."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    n, m = len(a), len(b)
    if n == 0 or m == 0:
        return np.zeros((n, m), dtype=np.float64)
    ix1 = np.maximum(a[:, 0, None], b[None, :, 0])
    iy1 = np.maximum(a[:, 1, None], b[None, :, 1])
    ix2 = np.minimum(a[:, 2, None], b[None, :, 2])
    iy2 = np.minimum(a[:, 3, None], b[None, :, 3])
    inter = np.maximum(ix2 - ix1, 0.0) * np.maximum(iy2 - iy1, 0.0)
    area_a = (a[:, 2] - a[:, 0]) * (a[:, 3] - a[:, 1])
    area_b = (b[:, 2] - b[:, 0]) * (b[:, 3] - b[:, 1])
    union = (area_a[:, None] + area_b[None, :]) - inter
    out = np.zeros_like(inter)
    np.divide(inter, union, out=out, where=union > 0.0)
    return out


def nms_keep(boxes: np.ndarray, iou_threshold: float) -> np.ndarray:
    """Greedy suppression mask over priority-ordered boxes.

    Row i is kept iff its IoU with every kept earlier row is strictly below
    the threshold.
    """
    boxes = np.asarray(boxes, dtype=np.float64)
    n = len(boxes)
    keep = np.zeros(n, dtype=bool)
    if n == 0:
        return keep
    ious = iou_matrix(boxes, boxes)
    for i in range(n):
        earlier = ious[i, :i][keep[:i]]
        if earlier.size and float(earlier.max()) >= iou_threshold:
            continue
        keep[i] = True
    return keep


def match_greedy(ious: np.ndarray, thresholds: np.ndarray) -> np.ndarray:
    """Greedy detection-to-ground-truth assignment per threshold.

    ``ious`` is (D, G) with rows in detection priority order. For each
    threshold t, each detection takes the unmatched ground truth with the
    highest IoU (ties: lowest index) provided that IoU >= t. Returns (T, D)
    int32 ground-truth indices, -1 for unmatched.
    """
    ious = np.asarray(ious, dtype=np.float64)
    thresholds = np.asarray(thresholds, dtype=np.float64)
    n_det, n_gt = ious.shape
    out = np.full((len(thresholds), n_det), -1, dtype=np.int32)
    if n_det == 0 or n_gt == 0:
        return out
    for ti, t in enumerate(thresholds):
        taken = np.zeros(n_gt, dtype=bool)
        for d in range(n_det):
            row = np.where(taken, -np.inf, ious[d])
            g = int(np.argmax(row))
            if row[g] >= t:
                out[ti, d] = g
                taken[g] = True
    return out
