"""Per-track pressure crops padded onto a fixed square canvas."""

from __future__ import annotations

import math
import warnings
from typing import Iterable, NamedTuple

import numpy as np

from .frames import PressureSequence
from .geometry import Box

__all__ = ["CROP_SIZE", "Crop", "CropOverflowWarning", "crop_window", "extract_crop", "extract_crops"]

CROP_SIZE = 128


class CropOverflowWarning(RuntimeWarning):
    """A box was larger than the canvas and got center-cropped."""


class Crop(NamedTuple):
    frame: int
    patch: np.ndarray  # (size, size)
    center: tuple[float, float]  # (x, y) in mat cells
    overflow: bool = False


def crop_window(box: Box, height: int, width: int) -> tuple[int, int, int, int]:
    """Integer cell window ``(r0, r1, c0, c1)`` covering ``box`` clipped to the mat."""
    c0 = max(0, math.floor(box.x))
    r0 = max(0, math.floor(box.y))
    c1 = min(width, math.ceil(box.x + box.w))
    r1 = min(height, math.ceil(box.y + box.h))
    return r0, max(r0, r1), c0, max(c0, c1)


def _place(n: int, size: int) -> tuple[int, int, int]:
    """(source start, destination start, length) along one axis."""
    if n <= size:
        return 0, (size - n) // 2, n
    return (n - size) // 2, 0, size


def extract_crop(grid: np.ndarray, box: Box, frame: int = 0, size: int = CROP_SIZE) -> Crop:
    """Copy the cells under ``box`` into the middle of a zero ``size`` x ``size`` canvas.

    The sub-grid lands at column offset ``(size - w) // 2`` and row offset
    ``(size - h) // 2``.  A side longer than ``size`` is center-cropped and a
    :class:`CropOverflowWarning` is issued; values are never rescaled.
    """
    height, width = grid.shape
    r0, r1, c0, c1 = crop_window(box, height, width)
    sub = grid[r0:r1, c0:c1]
    sr, dr, nr = _place(sub.shape[0], size)
    sc, dc, nc = _place(sub.shape[1], size)
    overflow = sub.shape[0] > size or sub.shape[1] > size
    if overflow:
        warnings.warn(f"frame {frame}: box {sub.shape[1]}x{sub.shape[0]} exceeds {size}, center-cropped",
                      CropOverflowWarning, stacklevel=2)
    patch = np.zeros((size, size), dtype=float)
    patch[dr:dr + nr, dc:dc + nc] = sub[sr:sr + nr, sc:sc + nc]
    return Crop(frame, patch, box.center, overflow)


def extract_crops(seq: PressureSequence, tracks: Iterable, size: int = CROP_SIZE) -> dict[int, list[Crop]]:
    """Crops for every ``(frame, id, box)`` track row, grouped by track id."""
    by_frame: dict[int, list] = {}
    for row in tracks:
        by_frame.setdefault(row.frame, []).append(row)
    out: dict[int, list[Crop]] = {}
    for k in sorted(by_frame):
        grid = seq.frame(k)
        for row in sorted(by_frame[k], key=lambda r: r.id):
            out.setdefault(row.id, []).append(extract_crop(grid, row.box, k, size))
    return dict(sorted(out.items()))
