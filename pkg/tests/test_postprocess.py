"""postprocess: confidence filter and class-wise greedy NMS."""

from __future__ import annotations

import numpy as np
import pytest

from detbench.dataset import BBox
from detbench.errors import PostprocessError
from detbench.metrics import iou
from detbench.postprocess import Detection, filter_by_confidence, nms_classwise


def det(score, box=(0, 0, 10, 10), class_id=0, image_id="img"):
    return Detection(image_id, class_id, BBox(*box), score)


class TestDetection:
    @pytest.mark.parametrize("score", [-0.1, 1.1, float("nan")])
    def test_score_range(self, score):
        with pytest.raises(PostprocessError):
            det(score)

    def test_negative_class(self):
        with pytest.raises(PostprocessError):
            Detection("i", -1, BBox(0, 0, 1, 1), 0.5)


class TestFilterByConfidence:
    def test_zero_keeps_everything(self):
        dets = [det(0.1), det(0.9)]
        assert filter_by_confidence(dets, 0.0) == dets

    def test_boundary_inclusive(self):
        dets = [det(0.9), det(1.0)]
        assert filter_by_confidence(dets, 1.0) == [dets[1]]

    def test_mid_threshold(self):
        dets = [det(0.3), det(0.6), det(0.9)]
        assert [d.score for d in filter_by_confidence(dets, 0.5)] == [0.6, 0.9]

    def test_order_preserved(self):
        dets = [det(0.9), det(0.2), det(0.8)]
        assert [d.score for d in filter_by_confidence(dets, 0.1)] == [0.9, 0.2, 0.8]

    @pytest.mark.parametrize("threshold", [-0.5, 1.5])
    def test_bad_threshold(self, threshold):
        with pytest.raises(PostprocessError):
            filter_by_confidence([], threshold)


class TestNms:
    def test_single_detection_kept(self):
        d = det(0.7)
        assert nms_classwise([d], 0.5) == [d]

    def test_duplicate_suppressed(self):
        high, low = det(0.9), det(0.8)
        assert nms_classwise([high, low], 0.5) == [high]
        assert nms_classwise([low, high], 0.5) == [high]

    def test_classes_independent(self):
        a, b = det(0.9, class_id=0), det(0.8, class_id=1)
        assert nms_classwise([a, b], 0.5) == [a, b]

    def test_disjoint_boxes_survive(self):
        a = det(0.9, box=(0, 0, 10, 10))
        b = det(0.8, box=(20, 20, 30, 30))
        assert nms_classwise([a, b], 0.5) == [a, b]

    def test_mixed_images_rejected(self):
        with pytest.raises(PostprocessError, match="one image"):
            nms_classwise([det(0.9, image_id="a"), det(0.8, image_id="b")], 0.5)

    def test_threshold_strictness(self):
        # IoU exactly at the threshold suppresses (kept requires < threshold)
        a = det(0.9, box=(0, 0, 10, 10))
        b = det(0.8, box=(5, 0, 15, 10))  # IoU 1/3 with a
        third = iou(a.box, b.box)
        assert nms_classwise([a, b], third) == [a]
        assert nms_classwise([a, b], third + 1e-9) == [a, b]

    def test_equal_score_ties_deterministic(self):
        a = det(0.8, box=(0, 0, 10, 10))
        b = det(0.8, box=(1, 0, 11, 10))
        kept_ab = nms_classwise([a, b], 0.5)
        kept_ba = nms_classwise([b, a], 0.5)
        assert kept_ab == kept_ba
        assert len(kept_ab) == 1


def random_dets(rng, n, n_classes=3, image_id="img"):
    out = []
    for _ in range(n):
        xs = np.sort(rng.uniform(0, 60, 2))
        ys = np.sort(rng.uniform(0, 60, 2))
        out.append(
            Detection(
                image_id,
                int(rng.integers(0, n_classes)),
                BBox(*(float(v) for v in (xs[0], ys[0], xs[1], ys[1]))),
                float(np.round(rng.uniform(0, 1), 3)),
            )
        )
    return out


def content(dets):
    return sorted((d.class_id, d.box.as_tuple(), d.score) for d in dets)


class TestNmsProperties:
    def test_fuzz(self):
        rng = np.random.default_rng(999)
        for _ in range(200):
            dets = random_dets(rng, int(rng.integers(0, 25)))
            threshold = float(rng.uniform(0.05, 0.95))
            kept = nms_classwise(dets, threshold)
            # output is a subset of the input objects
            assert all(any(k is d for d in dets) for k in kept)
            # pairwise IoU below threshold within each class
            for i, a in enumerate(kept):
                for b in kept[i + 1 :]:
                    if a.class_id == b.class_id:
                        assert iou(a.box, b.box) < threshold
            # idempotent
            assert nms_classwise(kept, threshold) == kept
            # permutation invariant (content-wise)
            perm = [dets[i] for i in rng.permutation(len(dets))]
            assert content(nms_classwise(perm, threshold)) == content(kept)
