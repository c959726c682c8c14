"""detbench: evaluation and benchmarking engine for detection pipelines.

Dataset splitting, photometric augmentation, letterbox geometry, NMS,
COCO-style mAP/F1 scoring, staged speed measurement, and comparison
reports, all around a pluggable detector backend.
"""

from .dataset import (
    Annotation,
    BBox,
    ClassTable,
    DatasetIndex,
    ImageRecord,
    SplitAssignment,
    load_dataset,
    parse_label_file,
    serialize_annotations,
    split_dataset,
)
from .errors import DetbenchError
from .geometry import LetterboxTransform, box_from_input_space, box_to_input_space, letterbox
from .metrics import EvalReport, IoUThresholdGrid, evaluate, iou, match_detections
from .postprocess import Detection, filter_by_confidence, nms_classwise

__version__ = "0.1.0"

__all__ = [
    "Annotation",
    "BBox",
    "ClassTable",
    "DatasetIndex",
    "Detection",
    "DetbenchError",
    "EvalReport",
    "ImageRecord",
    "IoUThresholdGrid",
    "LetterboxTransform",
    "SplitAssignment",
    "box_from_input_space",
    "box_to_input_space",
    "evaluate",
    "filter_by_confidence",
    "iou",
    "letterbox",
    "load_dataset",
    "match_detections",
    "nms_classwise",
    "parse_label_file",
    "serialize_annotations",
    "split_dataset",
]
