"""Shared fixtures and instance generators for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from detbench.dataset import Annotation, BBox, ClassTable, DatasetIndex, ImageRecord
from detbench.postprocess import Detection


def random_box(rng: np.random.Generator, width: float, height: float) -> tuple:
    xs = np.sort(rng.uniform(0.0, width, 2))
    ys = np.sort(rng.uniform(0.0, height, 2))
    return (float(xs[0]), float(ys[0]), float(xs[1]), float(ys[1]))


def random_instance(rng: np.random.Generator, max_images=5, max_classes=4, max_boxes=6):
    """A small scoring instance: (DatasetIndex, subset ids, detections, gt tuples).

    Detections are loosely correlated with ground truth (some are perturbed
    copies, some are noise) so matching exercises real overlap structure.
    """
    n_images = int(rng.integers(1, max_images + 1))
    n_classes = int(rng.integers(1, max_classes + 1))
    table = ClassTable(tuple(f"c{i}" for i in range(n_classes)))
    records, gts, dets = [], [], []
    for i in range(n_images):
        image_id = f"im{i:02d}"
        width, height = 100.0, 80.0
        annotations = []
        for _ in range(int(rng.integers(0, max_boxes + 1))):
            class_id = int(rng.integers(0, n_classes))
            box = random_box(rng, width, height)
            annotations.append(Annotation(image_id, class_id, BBox(*box)))
            gts.append((image_id, class_id, box))
            # Perturbed echo of the ground truth, sometimes.
            if rng.uniform() < 0.7:
                shift = rng.normal(0.0, 4.0, size=4)
                x1 = min(max(box[0] + shift[0], 0.0), width)
                y1 = min(max(box[1] + shift[1], 0.0), height)
                x2 = min(max(box[2] + shift[2], 0.0), width)
                y2 = min(max(box[3] + shift[3], 0.0), height)
                if x2 < x1:
                    x1, x2 = x2, x1
                if y2 < y1:
                    y1, y2 = y2, y1
                score = float(np.round(rng.uniform(0.05, 1.0), 3))
                dets.append(Detection(image_id, class_id, BBox(x1, y1, x2, y2), score))
        for _ in range(int(rng.integers(0, 3))):
            class_id = int(rng.integers(0, n_classes))
            box = random_box(rng, width, height)
            score = float(np.round(rng.uniform(0.05, 1.0), 3))
            dets.append(Detection(image_id, class_id, BBox(*box), score))
        records.append(
            ImageRecord(image_id, int(width), int(height), tuple(annotations))
        )
    index = DatasetIndex(table, records)
    return index, [r.image_id for r in records], dets, gts


@pytest.fixture(scope="session")
def synth_root(tmp_path_factory):
    """A 50-image synthetic dataset root; treat as read-only."""
    from detbench.bench import generate_synthetic_dataset

    root = tmp_path_factory.mktemp("synth50")
    index = generate_synthetic_dataset(root, n_images=50, n_classes=4, seed=7)
    return root, index
