"""kernels: both backends are correct and agree bit-for-bit."""

from __future__ import annotations

import numpy as np
import pytest

from detbench import _kernels_py as pure
from detbench import kernels

try:
    from detbench import _ckernels as compiled
except ImportError:
    compiled = None

BACKENDS = [pure] + ([compiled] if compiled is not None else [])
GRID = np.array([(50 + 5 * k) / 100.0 for k in range(10)])


def random_boxes(rng, n, limit=100.0):
    xs = np.sort(rng.uniform(0, limit, (n, 2)), axis=1)
    ys = np.sort(rng.uniform(0, limit, (n, 2)), axis=1)
    return np.stack([xs[:, 0], ys[:, 0], xs[:, 1], ys[:, 1]], axis=1)


@pytest.mark.parametrize("impl", BACKENDS, ids=lambda m: m.__name__.rsplit(".", 1)[-1])
class TestEachBackend:
    def test_blend_reference_values(self, impl):
        a = np.array([128, 250, 101, 0], dtype=np.uint8)
        b = np.zeros(4, dtype=np.uint8)
        assert impl.blend_u8(a, b, 1.5, 0.0, 10.0).tolist() == [202, 255, 162, 10]
        assert impl.blend_u8(a, b, 0.5, 0.0, 0.0).tolist() == [64, 125, 50, 0]
        assert impl.blend_u8(a, a, 1.0, 0.0, 0.0).tolist() == a.tolist()

    def test_blend_shape_mismatch(self, impl):
        with pytest.raises(ValueError):
            impl.blend_u8(np.zeros(3, np.uint8), np.zeros(4, np.uint8), 1, 0, 0)

    def test_blend_preserves_shape(self, impl):
        a = np.zeros((4, 5, 3), dtype=np.uint8)
        assert impl.blend_u8(a, a, 1.2, 0.0, 3.0).shape == (4, 5, 3)

    def test_iou_matrix_values(self, impl):
        a = np.array([[0.0, 0.0, 10.0, 10.0]])
        b = np.array([[0.0, 0.0, 10.0, 10.0], [5.0, 0.0, 15.0, 10.0], [20.0, 20.0, 21.0, 21.0]])
        m = impl.iou_matrix(a, b)
        assert m[0, 0] == 1.0
        assert m[0, 1] == 1 / 3
        assert m[0, 2] == 0.0

    def test_iou_matrix_empty(self, impl):
        assert impl.iou_matrix(np.zeros((0, 4)), np.zeros((3, 4))).shape == (0, 3)

    def test_nms_keeps_first_of_duplicates(self, impl):
        boxes = np.array([[0.0, 0.0, 10.0, 10.0], [0.0, 0.0, 10.0, 10.0]])
        assert impl.nms_keep(boxes, 0.5).tolist() == [True, False]

    def test_nms_disjoint_all_kept(self, impl):
        boxes = np.array([[0.0, 0.0, 1.0, 1.0], [5.0, 5.0, 6.0, 6.0]])
        assert impl.nms_keep(boxes, 0.1).tolist() == [True, True]

    def test_match_prefers_highest_iou(self, impl):
        ious = np.array([[0.6, 0.9], [0.7, 0.8]])
        out = impl.match_greedy(ious, np.array([0.5]))
        assert out[0].tolist() == [1, 0]

    def test_match_respects_threshold(self, impl):
        ious = np.array([[0.6]])
        out = impl.match_greedy(ious, np.array([0.5, 0.65]))
        assert out[:, 0].tolist() == [0, -1]

    def test_match_empty(self, impl):
        out = impl.match_greedy(np.zeros((0, 0)), GRID)
        assert out.shape == (10, 0)


@pytest.mark.skipif(compiled is None, reason="compiled extension not built")
class TestBackendEquivalence:
    def test_blend_bitwise(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            n = int(rng.integers(1, 2000))
            a = rng.integers(0, 256, n).astype(np.uint8)
            b = rng.integers(0, 256, n).astype(np.uint8)
            alpha = float(rng.uniform(-0.5, 3.0))
            beta = float(rng.uniform(-0.5, 1.5))
            gamma = float(rng.uniform(-300, 300))
            assert np.array_equal(
                pure.blend_u8(a, b, alpha, beta, gamma),
                compiled.blend_u8(a, b, alpha, beta, gamma),
            )

    def test_iou_bitwise(self):
        rng = np.random.default_rng(12)
        for _ in range(30):
            a = random_boxes(rng, int(rng.integers(0, 40)))
            b = random_boxes(rng, int(rng.integers(0, 40)))
            assert np.array_equal(pure.iou_matrix(a, b), compiled.iou_matrix(a, b))

    def test_nms_identical(self):
        rng = np.random.default_rng(13)
        for _ in range(100):
            boxes = random_boxes(rng, int(rng.integers(0, 60)), limit=40.0)
            thr = float(rng.uniform(0.05, 0.95))
            assert np.array_equal(pure.nms_keep(boxes, thr), compiled.nms_keep(boxes, thr))

    def test_match_identical(self):
        rng = np.random.default_rng(14)
        for _ in range(100):
            d = int(rng.integers(0, 12))
            g = int(rng.integers(0, 10))
            ious = rng.uniform(0, 1, (d, g))
            assert np.array_equal(
                pure.match_greedy(ious, GRID), compiled.match_greedy(ious, GRID)
            )


def test_dispatcher_exposes_backend():
    assert kernels.backend_name() in ("compiled", "python")
    assert callable(kernels.blend_u8)
