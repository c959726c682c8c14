"""Letterbox geometry: aspect-preserving scale to a square input plus padding.

Coordinates stay continuous end to end; only adapters that actually render
pixels need the integer padding helper, which assigns the odd pixel to the
bottom/right edge.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .dataset import BBox
from .errors import GeometryError


@dataclass(frozen=True)
class LetterboxTransform:
    """scale then translate: input_x = x * scale + pad_x."""

    scale: float
    pad_x: float
    pad_y: float
    target: int

    def to_dict(self) -> dict:
        return {
            "scale": self.scale,
            "pad_x": self.pad_x,
            "pad_y": self.pad_y,
            "target": self.target,
        }


def letterbox(width: float, height: float, target: int) -> LetterboxTransform:
    """The unique transform fitting width x height into a target square.

    scale = min(target/width, target/height); the leftover space on each
    axis is split evenly into left/top padding.
    """
    if width <= 0 or height <= 0 or target <= 0:
        raise GeometryError(
            f"dimensions must be positive: width={width} height={height} target={target}"
        )
    scale = min(target / width, target / height)
    # width*scale can overshoot target by one ulp on the tight axis.
    pad_x = max((target - width * scale) / 2.0, 0.0)
    pad_y = max((target - height * scale) / 2.0, 0.0)
    return LetterboxTransform(scale=scale, pad_x=pad_x, pad_y=pad_y, target=target)


def box_to_input_space(box: BBox, t: LetterboxTransform) -> BBox:
    return BBox(
        box.x1 * t.scale + t.pad_x,
        box.y1 * t.scale + t.pad_y,
        box.x2 * t.scale + t.pad_x,
        box.y2 * t.scale + t.pad_y,
    )


def box_from_input_space(box: BBox, t: LetterboxTransform) -> BBox:
    """Exact inverse of box_to_input_space."""
    if t.scale <= 0 or not math.isfinite(t.scale):
        raise GeometryError(f"cannot invert transform with scale {t.scale}")
    return BBox(
        (box.x1 - t.pad_x) / t.scale,
        (box.y1 - t.pad_y) / t.scale,
        (box.x2 - t.pad_x) / t.scale,
        (box.y2 - t.pad_y) / t.scale,
    )


def pixel_padding(
    width: int, height: int, t: LetterboxTransform
) -> tuple[int, int, int, int]:
    """Integer (left, top, right, bottom) padding for rendering adapters.

    The resized content is rounded to whole pixels; any odd leftover pixel
    goes to the bottom/right.
    """
    scaled_w = int(round(width * t.scale))
    scaled_h = int(round(height * t.scale))
    left = (t.target - scaled_w) // 2
    top = (t.target - scaled_h) // 2
    right = t.target - scaled_w - left
    bottom = t.target - scaled_h - top
    return (left, top, right, bottom)
