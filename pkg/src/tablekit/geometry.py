"""Axis-aligned box primitives: centroids, IoU, generalized IoU, box losses.

Everything here is a pure function over immutable values; coordinates are
double precision and never snapped to integer pixels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DegenerateBoxPairError

_NORM_TOL = 1e-9


@dataclass(frozen=True)
class Point:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"point coordinates must be finite, got ({self.x}, {self.y})")


@dataclass(frozen=True)
class BBox:
    """Axis-aligned rectangle (x1, y1, x2, y2) with x1 <= x2 and y1 <= y2.

    Zero-area boxes are legal; inverted boxes are rejected at construction
    so upstream format errors fail loudly instead of being silently swapped.
    """

    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        for v in (self.x1, self.y1, self.x2, self.y2):
            if not math.isfinite(v):
                raise ValueError(f"box coordinates must be finite, got {self.as_tuple()}")
        if self.x2 < self.x1 or self.y2 < self.y1:
            raise ValueError(f"inverted box: {self.as_tuple()}")

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    @property
    def area(self) -> float:
        return self.width * self.height

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x1, self.y1, self.x2, self.y2)

    def translate(self, dx: float, dy: float) -> "BBox":
        return BBox(self.x1 + dx, self.y1 + dy, self.x2 + dx, self.y2 + dy)

    def scale(self, s: float) -> "BBox":
        return BBox(self.x1 * s, self.y1 * s, self.x2 * s, self.y2 * s)

    def clamp_to(self, other: "BBox") -> "BBox":
        """Clamp this box into `other`, preserving validity."""
        x1 = min(max(self.x1, other.x1), other.x2)
        y1 = min(max(self.y1, other.y1), other.y2)
        x2 = min(max(self.x2, other.x1), other.x2)
        y2 = min(max(self.y2, other.y1), other.y2)
        return BBox(x1, y1, x2, y2)

    def intersects(self, other: "BBox") -> bool:
        """True when the closed rectangles share at least a boundary point."""
        return not (
            self.x2 < other.x1 or other.x2 < self.x1
            or self.y2 < other.y1 or other.y2 < self.y1
        )


def centroid(box: BBox) -> Point:
    """Center point of a box: ((x1+x2)/2, (y1+y2)/2)."""
    return Point((box.x1 + box.x2) / 2.0, (box.y1 + box.y2) / 2.0)


def intersection_area(a: BBox, b: BBox) -> float:
    w = min(a.x2, b.x2) - max(a.x1, b.x1)
    h = min(a.y2, b.y2) - max(a.y1, b.y1)
    if w <= 0.0 or h <= 0.0:
        return 0.0
    return w * h


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union in [0, 1].

    Two zero-area boxes score 0 rather than NaN: degenerate detections count
    as misses and the metric stays total.
    """
    inter = intersection_area(a, b)
    union = a.area + b.area - inter
    if union <= 0.0:
        return 0.0
    return inter / union


def enclosing_box(a: BBox, b: BBox) -> BBox:
    return BBox(
        min(a.x1, b.x1), min(a.y1, b.y1),
        max(a.x2, b.x2), max(a.y2, b.y2),
    )


def giou(a: BBox, b: BBox) -> float:
    """Generalized IoU in (-1, 1]: IoU minus the enclosing-box gap ratio.

    giou(a, b) = iou(a, b) - |C \\ (A u B)| / |C| with C the smallest
    enclosing box. Equals plain IoU whenever C adds no empty area, e.g.
    when one box contains the other.

    Raises DegenerateBoxPairError when both boxes have zero area (the
    enclosing-box ratio is undefined there).
    """
    if a.area <= 0.0 and b.area <= 0.0:
        raise DegenerateBoxPairError(
            f"giou undefined for two zero-area boxes: {a.as_tuple()} vs {b.as_tuple()}"
        )
    hull = enclosing_box(a, b).area
    inter = intersection_area(a, b)
    union = a.area + b.area - inter
    value = iou(a, b)
    if hull > 0.0:
        value -= (hull - union) / hull
    return value


@dataclass(frozen=True)
class NormBox:
    """Box as (cx, cy, w, h), each a fraction of the image size in [0, 1]."""

    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self):
        for name, v in (("cx", self.cx), ("cy", self.cy), ("w", self.w), ("h", self.h)):
            if not math.isfinite(v) or v < -_NORM_TOL or v > 1.0 + _NORM_TOL:
                raise ValueError(f"normalized box component {name}={v} outside [0, 1]")
        # Snap the 1e-9 slack back into range so downstream math stays clean.
        object.__setattr__(self, "cx", min(max(self.cx, 0.0), 1.0))
        object.__setattr__(self, "cy", min(max(self.cy, 0.0), 1.0))
        object.__setattr__(self, "w", min(max(self.w, 0.0), 1.0))
        object.__setattr__(self, "h", min(max(self.h, 0.0), 1.0))

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.cx, self.cy, self.w, self.h)


def to_corner(nb: NormBox, img_w: float, img_h: float) -> BBox:
    """Corner-form pixel box for a normalized box, clamped to the image."""
    if img_w <= 0 or img_h <= 0:
        raise ValueError(f"image dimensions must be positive, got {img_w}x{img_h}")
    x1 = (nb.cx - nb.w / 2.0) * img_w
    y1 = (nb.cy - nb.h / 2.0) * img_h
    x2 = (nb.cx + nb.w / 2.0) * img_w
    y2 = (nb.cy + nb.h / 2.0) * img_h
    return BBox(
        min(max(x1, 0.0), img_w), min(max(y1, 0.0), img_h),
        min(max(x2, 0.0), img_w), min(max(y2, 0.0), img_h),
    )


def to_norm(box: BBox, img_w: float, img_h: float) -> NormBox:
    """Inverse of to_corner for boxes inside the image."""
    if img_w <= 0 or img_h <= 0:
        raise ValueError(f"image dimensions must be positive, got {img_w}x{img_h}")
    c = centroid(box)
    return NormBox(c.x / img_w, c.y / img_h, box.width / img_w, box.height / img_h)


def box_l1(a: NormBox, b: NormBox) -> float:
    """Sum of absolute differences of the four (cx, cy, w, h) components."""
    return (
        abs(a.cx - b.cx) + abs(a.cy - b.cy)
        + abs(a.w - b.w) + abs(a.h - b.h)
    )


def l_box(a: NormBox, b: NormBox, lambda_iou: float, lambda_l1: float) -> float:
    """Weighted box loss: lambda_iou * (1 - GIoU) + lambda_l1 * L1.

    GIoU is computed on the corner-form boxes in the unit square; the L1
    term uses the raw (cx, cy, w, h) components.
    """
    if lambda_iou < 0 or lambda_l1 < 0:
        raise ValueError("box loss weights must be nonnegative")
    loss = 0.0
    if lambda_iou != 0.0:
        loss += lambda_iou * (1.0 - giou(to_corner(a, 1.0, 1.0), to_corner(b, 1.0, 1.0)))
    if lambda_l1 != 0.0:
        loss += lambda_l1 * box_l1(a, b)
    return loss
