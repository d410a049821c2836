"""Gated rectangular linear assignment.

By default the solver returns, among all matchings that avoid gated pairs
and have the largest possible number of pairs, one with minimum total cost.
With ``unmatched_cost`` set it instead minimises matched cost plus that
penalty per unmatched row, so a pair is only taken when it pays for itself.
Gated pairs are marked with :data:`INFEASIBLE` and can never be matched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels

__all__ = ["INFEASIBLE", "Assignment", "solve", "total_cost"]

#: Marker for a gated (forbidden) pair; compares greater than any cost.
INFEASIBLE = math.inf


@dataclass
class Assignment:
    matches: list[tuple[int, int]] = field(default_factory=list)
    unmatched_rows: list[int] = field(default_factory=list)
    unmatched_cols: list[int] = field(default_factory=list)


def _as_matrix(costs) -> np.ndarray:
    arr = np.asarray(costs, dtype=float)
    if arr.ndim == 1 and arr.size == 0:
        arr = arr.reshape(0, 0)
    if arr.ndim != 2:
        raise ValueError(f"cost matrix must be 2-D, got shape {arr.shape}")
    finite = np.isfinite(arr)
    if np.isnan(arr).any():
        raise ValueError("cost matrix contains NaN")
    if (arr[finite] < 0).any():
        raise ValueError("costs must be non-negative")
    # any +inf / -inf is treated as gated; negative infinity is a caller bug
    if np.isneginf(arr).any():
        raise ValueError("cost matrix contains -inf")
    return arr


def solve(costs, unmatched_cost: float | None = None) -> Assignment:
    """Solve a (possibly rectangular) gated assignment problem.

    ``costs`` is anything convertible to a 2-D float array of shape
    ``(rows, cols)``; entries equal to :data:`INFEASIBLE` are gated.  An empty
    or fully gated matrix yields no matches.
    """
    arr = _as_matrix(costs)
    n, m = arr.shape
    if unmatched_cost is None:
        unmatched = -1.0
    elif unmatched_cost >= 0:
        unmatched = float(unmatched_cost)
    else:
        raise ValueError("unmatched_cost must be non-negative")
    matches = kernels.solve_flat(arr.ravel().tolist(), n, m, unmatched)
    rows = {r for r, _ in matches}
    cols = {c for _, c in matches}
    return Assignment(
        matches=list(matches),
        unmatched_rows=[r for r in range(n) if r not in rows],
        unmatched_cols=[c for c in range(m) if c not in cols],
    )


def total_cost(costs, assignment: Assignment) -> float:
    arr = np.asarray(costs, dtype=float)
    return math.fsum(arr[r, c] for r, c in assignment.matches)
