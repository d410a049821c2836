"""Sparse storage for pressure-mat sequences."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, NamedTuple

import numpy as np

__all__ = ["SparseFrame", "PressureSequence", "MAT_HEIGHT", "MAT_WIDTH"]

MAT_HEIGHT = 240
MAT_WIDTH = 120


class SparseFrame(NamedTuple):
    """Non-zero cells of one frame in row-major order."""

    rows: np.ndarray
    cols: np.ndarray
    values: np.ndarray

    @classmethod
    def empty(cls) -> "SparseFrame":
        return cls(np.zeros(0, np.int32), np.zeros(0, np.int32), np.zeros(0, np.float64))

    @classmethod
    def from_dense(cls, grid: np.ndarray) -> "SparseFrame":
        r, c = np.nonzero(grid)
        return cls(r.astype(np.int32), c.astype(np.int32), grid[r, c].astype(np.float64))

    def dense(self, height: int, width: int) -> np.ndarray:
        out = np.zeros((height, width))
        out[self.rows, self.cols] = self.values
        return out

    @property
    def nnz(self) -> int:
        return int(self.values.size)


@dataclass
class PressureSequence:
    height: int = MAT_HEIGHT
    width: int = MAT_WIDTH
    fps: float = 25.0
    frames: list[SparseFrame] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.frames)

    def frame(self, k: int) -> np.ndarray:
        """Dense grid of 1-based frame ``k``."""
        if not 1 <= k <= len(self.frames):
            raise IndexError(f"frame {k} out of range 1..{len(self.frames)}")
        return self.frames[k - 1].dense(self.height, self.width)

    def __iter__(self) -> Iterator[tuple[int, np.ndarray]]:
        for k in range(1, len(self.frames) + 1):
            yield k, self.frame(k)

    def equals(self, other: "PressureSequence") -> bool:
        if (self.height, self.width, self.fps, len(self)) != (other.height, other.width, other.fps, len(other)):
            return False
        return all(
            np.array_equal(a.rows, b.rows) and np.array_equal(a.cols, b.cols) and np.array_equal(a.values, b.values)
            for a, b in zip(self.frames, other.frames)
        )
