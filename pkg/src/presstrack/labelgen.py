"""Per-person footprint labels from raw pressure and projected foot joints.

Pipeline per frame: threshold the mat into connected pressure regions, give
each region the id of the person owning the nearest foot joint, then merge
each person's regions into one bounding box.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy import ndimage

from .frames import PressureSequence
from .geometry import Box, merge_boxes
from .io import MotRow

__all__ = [
    "Region",
    "PersonAnnotation",
    "threshold_regions",
    "nearest_person",
    "assign_regions",
    "make_labels",
    "frame_labels",
    "generate_labels",
    "DEFAULT_TAU",
]

#: Default threshold: 2% of the simulator's per-cell full-load scale (1.0).
DEFAULT_TAU = 0.02

_STRUCTURE = {
    4: ndimage.generate_binary_structure(2, 1),
    8: ndimage.generate_binary_structure(2, 2),
}


@dataclass(eq=False)
class Region:
    cells: np.ndarray  # (n, 2) int array of (row, col)
    center: tuple[float, float]  # (row, col) centroid in cell indices
    bbox: Box
    mass: float

    @property
    def xy(self) -> tuple[float, float]:
        """Centre as a mat point ``(x, y)``; cell ``(r, c)`` spans ``[c, c+1) x [r, r+1)``."""
        return (self.center[1] + 0.5, self.center[0] + 0.5)


@dataclass
class PersonAnnotation:
    person_id: int
    foot_joints: list[tuple[float, float]]  # (x, y) mat points
    root: tuple[float, float] | None = None
    joint_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if not self.joint_names:
            self.joint_names = tuple(f"j{i}" for i in range(len(self.foot_joints)))


def threshold_regions(frame, tau: float = DEFAULT_TAU, connectivity: int = 8,
                      weighted: bool = False) -> list[Region]:
    """Connected components of cells with pressure ``>= tau``.

    Regions come out in raster order of their first cell.  ``weighted``
    switches the centre to the pressure-weighted centroid.
    """
    if not tau > 0:
        raise ValueError("tau must be positive")
    grid = np.asarray(frame, dtype=float)
    mask = grid >= tau
    labels, n = ndimage.label(mask, structure=_STRUCTURE[connectivity])
    if n == 0:
        return []
    regions = []
    for idx, sl in enumerate(ndimage.find_objects(labels), start=1):
        sub = labels[sl] == idx
        rr, cc = np.nonzero(sub)
        rr = rr + sl[0].start
        cc = cc + sl[1].start
        vals = grid[rr, cc]
        if weighted:
            m = vals.sum()
            center = (float((rr * vals).sum() / m), float((cc * vals).sum() / m))
        else:
            center = (float(rr.mean()), float(cc.mean()))
        bbox = Box(float(sl[1].start), float(sl[0].start),
                   float(sl[1].stop - sl[1].start), float(sl[0].stop - sl[0].start))
        regions.append(Region(np.stack([rr, cc], axis=1), center, bbox, float(vals.sum())))
    return regions


def nearest_person(point: tuple[float, float], persons: Sequence[PersonAnnotation]) -> int | None:
    """Id of the person with the foot joint closest to ``point``.

    Ties go to the lowest person id; persons without joints are skipped.
    """
    best_id, best_d = None, math.inf
    px, py = point
    for p in persons:
        if not p.foot_joints:
            continue
        d = min(math.hypot(px - fx, py - fy) for fx, fy in p.foot_joints)
        if d < best_d or (d == best_d and best_id is not None and p.person_id < best_id):
            best_id, best_d = p.person_id, d
    return best_id


def assign_regions(regions: Sequence[Region], persons: Sequence[PersonAnnotation]) -> dict[int, int]:
    """Map region index -> person id by nearest projected foot joint."""
    if not regions:
        return {}
    if not persons:
        raise ValueError("cannot assign regions without person annotations")
    out = {}
    for j, r in enumerate(regions):
        pid = nearest_person(r.xy, persons)
        if pid is not None:
            out[j] = pid
    return out


def make_labels(regions: Sequence[Region], assignment: Mapping[int, int]) -> dict[int, Box]:
    """Merge each person's regions into their minimum bounding box."""
    per_person: dict[int, list[Box]] = {}
    for j, pid in assignment.items():
        per_person.setdefault(pid, []).append(regions[j].bbox)
    return {pid: merge_boxes(boxes) for pid, boxes in sorted(per_person.items())}


def frame_labels(grid, persons: Sequence[PersonAnnotation], tau: float = DEFAULT_TAU,
                 connectivity: int = 8, weighted: bool = False) -> dict[int, Box]:
    regions = threshold_regions(grid, tau, connectivity, weighted)
    return make_labels(regions, assign_regions(regions, persons))


def generate_labels(seq: PressureSequence, annotations, tau: float = DEFAULT_TAU,
                    connectivity: int = 8, weighted: bool = False) -> list[MotRow]:
    """Label rows (``conf = 1``) for every frame of a sequence.

    ``annotations`` is either a mapping frame -> persons (missing frames mean
    nobody annotated) or a list aligned with the frames.
    """
    n = len(seq)
    if isinstance(annotations, Mapping):
        bad = [f for f in annotations if not 1 <= f <= n]
        if bad:
            raise ValueError(f"annotations for frames {bad[:5]} outside sequence 1..{n}")
        get = lambda k: annotations.get(k, ())  # noqa: E731
    else:
        if len(annotations) != n:
            raise ValueError(f"{len(annotations)} annotation frames for {n} pressure frames")
        get = lambda k: annotations[k - 1]  # noqa: E731
    rows = []
    for k in range(1, n + 1):
        fr = seq.frames[k - 1]
        if fr.nnz == 0:
            continue
        persons = get(k)
        labels = frame_labels(fr.dense(seq.height, seq.width), persons, tau, connectivity, weighted) if persons else {}
        if not persons and (fr.values >= tau).any():
            raise ValueError(f"frame {k} has pressure above threshold but no annotations")
        for pid, box in labels.items():
            rows.append(MotRow.of(k, pid, box, 1.0))
    return rows
