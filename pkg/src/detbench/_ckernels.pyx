# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels. Must agree bit-for-bit with _kernels_py (same IEEE
operation order; the build disables FMA contraction)."""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, rint

cnp.import_array()


def blend_u8(a, b, double alpha, double beta, double gamma):
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] av = np.ascontiguousarray(a, dtype=np.uint8).reshape(-1)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] bv = np.ascontiguousarray(b, dtype=np.uint8).reshape(-1)
    cdef Py_ssize_t n = av.shape[0]
    out = np.empty(n, dtype=np.uint8)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1] ov = out
    cdef Py_ssize_t i
    cdef double v
    for i in range(n):
        v = av[i] * alpha
        v = v + bv[i] * beta
        v = v + gamma
        v = rint(v)
        if v < 0.0:
            v = 0.0
        elif v > 255.0:
            v = 255.0
        ov[i] = <unsigned char> v
    return out.reshape(a.shape)


cdef inline double _pair_iou(const double* pa, const double* pb) nogil:
    cdef double ix1 = pa[0] if pa[0] > pb[0] else pb[0]
    cdef double iy1 = pa[1] if pa[1] > pb[1] else pb[1]
    cdef double ix2 = pa[2] if pa[2] < pb[2] else pb[2]
    cdef double iy2 = pa[3] if pa[3] < pb[3] else pb[3]
    cdef double iw = ix2 - ix1
    cdef double ih = iy2 - iy1
    if iw < 0.0:
        iw = 0.0
    if ih < 0.0:
        ih = 0.0
    cdef double inter = iw * ih
    cdef double area_a = (pa[2] - pa[0]) * (pa[3] - pa[1])
    cdef double area_b = (pb[2] - pb[0]) * (pb[3] - pb[1])
    cdef double union_ = (area_a + area_b) - inter
    if union_ > 0.0:
        return inter / union_
    return 0.0


def iou_matrix(a, b):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] av = np.ascontiguousarray(a, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=2] bv = np.ascontiguousarray(b, dtype=np.float64)
    cdef Py_ssize_t n = av.shape[0]
    cdef Py_ssize_t m = bv.shape[0]
    out = np.zeros((n, m), dtype=np.float64)
    if n == 0 or m == 0:
        return out
    if av.shape[1] != 4 or bv.shape[1] != 4:
        raise ValueError("boxes must be (N, 4)")
    cdef cnp.ndarray[cnp.float64_t, ndim=2] ov = out
    cdef Py_ssize_t i, j
    with nogil:
        for i in range(n):
            for j in range(m):
                ov[i, j] = _pair_iou(&av[i, 0], &bv[j, 0])
    return out


def nms_keep(boxes, double iou_threshold):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] bv = np.ascontiguousarray(boxes, dtype=np.float64)
    cdef Py_ssize_t n = bv.shape[0]
    out = np.zeros(n, dtype=bool)
    if n == 0:
        return out
    if bv.shape[1] != 4:
        raise ValueError("boxes must be (N, 4)")
    cdef cnp.ndarray[cnp.uint8_t, ndim=1, cast=True] keep = out
    cdef Py_ssize_t i, j
    cdef bint suppressed
    with nogil:
        for i in range(n):
            suppressed = False
            for j in range(i):
                if keep[j] and _pair_iou(&bv[i, 0], &bv[j, 0]) >= iou_threshold:
                    suppressed = True
                    break
            if not suppressed:
                keep[i] = True
    return out


def match_greedy(ious, thresholds):
    cdef cnp.ndarray[cnp.float64_t, ndim=2] iv = np.ascontiguousarray(ious, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] tv = np.ascontiguousarray(thresholds, dtype=np.float64)
    cdef Py_ssize_t n_det = iv.shape[0]
    cdef Py_ssize_t n_gt = iv.shape[1]
    cdef Py_ssize_t n_thr = tv.shape[0]
    out = np.full((n_thr, n_det), -1, dtype=np.int32)
    if n_det == 0 or n_gt == 0:
        return out
    cdef cnp.ndarray[cnp.int32_t, ndim=2] ov = out
    taken_arr = np.zeros(n_gt, dtype=bool)
    cdef cnp.ndarray[cnp.uint8_t, ndim=1, cast=True] taken = taken_arr
    cdef Py_ssize_t ti, d, g, best
    cdef double t, v, best_v
    for ti in range(n_thr):
        t = tv[ti]
        taken[:] = False
        with nogil:
            for d in range(n_det):
                best = 0
                best_v = -INFINITY if taken[0] else iv[d, 0]
                for g in range(1, n_gt):
                    v = -INFINITY if taken[g] else iv[d, g]
                    if v > best_v:
                        best_v = v
                        best = g
                if best_v >= t:
                    ov[ti, d] = <int> best
                    taken[best] = True
    return out
