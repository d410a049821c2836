"""Axis-aligned box algebra in mat-cell units.

Boxes are ``(x, y, w, h)`` with ``x`` the left edge (column axis) and ``y``
the top edge (row axis, pointing down).  Coordinates are real valued so
sub-cell jittered detections are representable.
"""

from __future__ import annotations

import math
from typing import Iterable, NamedTuple

from ._backend import kernels

__all__ = ["Box", "iou", "uoe", "enclosure", "intersection_area", "merge_boxes"]


class Box(NamedTuple):
    x: float
    y: float
    w: float
    h: float

    def check(self) -> "Box":
        """Return self, raising ``ValueError`` if the box is malformed."""
        if not (math.isfinite(self.x) and math.isfinite(self.y)
                and math.isfinite(self.w) and math.isfinite(self.h)):
            raise ValueError(f"non-finite box {tuple(self)}")
        if self.w <= 0 or self.h <= 0:
            raise ValueError(f"box needs positive width and height, got {tuple(self)}")
        return self

    @classmethod
    def from_corners(cls, x0: float, y0: float, x1: float, y1: float) -> "Box":
        return cls(x0, y0, x1 - x0, y1 - y0)

    @property
    def x2(self) -> float:
        return self.x + self.w

    @property
    def y2(self) -> float:
        return self.y + self.h

    @property
    def area(self) -> float:
        return self.w * self.h

    @property
    def center(self) -> tuple[float, float]:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)

    def contains(self, other: "Box") -> bool:
        return (self.x <= other.x and self.y <= other.y
                and other.x + other.w <= self.x + self.w
                and other.y + other.h <= self.y + self.h)

    def contains_point(self, x: float, y: float) -> bool:
        return self.x <= x <= self.x + self.w and self.y <= y <= self.y + self.h

    def translate(self, dx: float, dy: float) -> "Box":
        return Box(self.x + dx, self.y + dy, self.w, self.h)

    def clip(self, width: float, height: float) -> "Box | None":
        """Intersection with the mat ``[0, width] x [0, height]``, or None."""
        x0, y0 = max(self.x, 0.0), max(self.y, 0.0)
        x1, y1 = min(self.x + self.w, width), min(self.y + self.h, height)
        if x1 <= x0 or y1 <= y0:
            return None
        return Box(x0, y0, x1 - x0, y1 - y0)


def iou(a: Box, b: Box) -> float:
    """Intersection over union; 0 for disjoint or edge-touching boxes."""
    return kernels.iou(tuple(a), tuple(b))


def uoe(a: Box, b: Box) -> float:
    """Union over enclosure: ``|a U b| / |enclosure(a, b)|``.

    Unlike IoU this stays high when one box grows or shrinks around the
    other, and only decays with the empty space the enclosure has to cover.
    """
    return kernels.uoe(tuple(a), tuple(b))


def intersection_area(a: Box, b: Box) -> float:
    iw = min(a.x + a.w, b.x + b.w) - max(a.x, b.x)
    ih = min(a.y + a.h, b.y + b.h) - max(a.y, b.y)
    if iw <= 0 or ih <= 0:
        return 0.0
    return iw * ih


def _extent(lo: float, hi: float) -> float:
    """Smallest ``w`` with ``lo + w >= hi`` in floating point."""
    w = hi - lo
    while lo + w < hi:
        w = math.nextafter(w, math.inf)
    return w


def enclosure(a: Box, b: Box) -> Box:
    """Smallest axis-aligned box containing both inputs."""
    if a.contains(b):
        return a
    if b.contains(a):
        return b
    x0, y0 = min(a.x, b.x), min(a.y, b.y)
    return Box(x0, y0, _extent(x0, max(a.x + a.w, b.x + b.w)), _extent(y0, max(a.y + a.h, b.y + b.h)))


def merge_boxes(boxes: Iterable[Box]) -> Box:
    """Minimum bounding rectangle of a non-empty collection of boxes."""
    boxes = list(boxes)
    if not boxes:
        raise ValueError("merge_boxes needs at least one box")
    if len(boxes) == 1:
        return boxes[0]
    x0 = min(b.x for b in boxes)
    y0 = min(b.y for b in boxes)
    x1 = max(b.x + b.w for b in boxes)
    y1 = max(b.y + b.h for b in boxes)
    for b in boxes:
        # Return an input unchanged when it already spans everything so the
        # result is bitwise independent of input order.
        if b.x == x0 and b.y == y0 and b.x + b.w == x1 and b.y + b.h == y1:
            return b
    return Box(x0, y0, _extent(x0, x1), _extent(y0, y1))
