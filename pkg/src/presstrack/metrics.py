"""Tracking and trajectory evaluation.

CLEAR MOT counts (FN, FP, ID switches, fragmentations, MOTA, MOTP) with the
usual carry-over of last frame's correspondences, identity metrics (IDF1,
IDP, IDR) from a global one-to-one id mapping, and root-trajectory errors
after per-segment rigid alignment.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from ._backend import kernels
from .assign import INFEASIBLE, solve
from .geometry import Box

__all__ = [
    "MetricsConfig",
    "MotReport",
    "Trajectory",
    "RigidTransform2D",
    "TrajReport",
    "clearmot",
    "umeyama_align",
    "segment_error",
    "rte",
    "evaluate_trajectories",
    "MM_PER_CELL",
]

MM_PER_CELL = 10.0


@dataclass
class MetricsConfig:
    iou_threshold: float = 0.5
    motp_mode: str = "overlap"  # or "distance"
    seg_len: int = 100
    keep_partial: bool = True

    def validate(self) -> "MetricsConfig":
        if not 0.0 < self.iou_threshold <= 1.0:
            raise ValueError("iou_threshold: must lie in (0, 1]")
        if self.motp_mode not in ("overlap", "distance"):
            raise ValueError("motp_mode: expected 'overlap' or 'distance'")
        if int(self.seg_len) != self.seg_len or self.seg_len < 2:
            raise ValueError("seg_len: must be an integer >= 2")
        return self


@dataclass
class MotReport:
    mota: float
    motp: float
    fn_count: int
    fp_count: int
    idsw: int
    frag: int
    idf1: float
    idp: float
    idr: float
    gt_count: int
    hyp_count: int = 0
    matches: int = 0
    frames: int = 0
    gt_ids: int = 0
    hyp_ids: int = 0
    motp_mode: str = "overlap"

    def as_dict(self) -> dict:
        return asdict(self)


def _by_frame(rows) -> dict[int, dict[int, Box]]:
    out: dict[int, dict[int, Box]] = {}
    for r in rows:
        if hasattr(r, "box"):
            frame, ident, box = r.frame, r.id, r.box
        else:
            frame, ident, box = r
        per = out.setdefault(int(frame), {})
        if ident in per:
            raise ValueError(f"id {ident} appears twice in frame {frame}")
        per[ident] = Box(*box)
    return out


def _center_dist(a: Box, b: Box) -> float:
    return math.hypot(a.x + a.w / 2 - b.x - b.w / 2, a.y + a.h / 2 - b.y - b.h / 2)


def clearmot(gt, hyp, iou_threshold: float = 0.5, motp_mode: str = "overlap") -> MotReport:
    """CLEAR MOT and identity metrics.

    ``gt`` and ``hyp`` are iterables of rows with ``frame``, ``id`` and
    ``box`` (MOT rows, track rows or ``(frame, id, Box)`` tuples).
    """
    gt_f = _by_frame(gt)
    hyp_f = _by_frame(hyp)
    gt_count = sum(len(v) for v in gt_f.values())
    if gt_count == 0:
        raise ValueError("ground truth is empty; metrics are undefined")
    hyp_count = sum(len(v) for v in hyp_f.values())

    prev: dict = {}        # gt id -> hyp id matched in the previous frame
    last_hyp: dict = {}    # gt id -> hyp id at its last matched frame
    was_matched: dict = {}  # gt id -> matched at its previous appearance
    fn = fp = idsw = frag = nmatch = 0
    motp_sum = 0.0
    # identity co-occurrence counts for the global id mapping
    pair_counts: dict[tuple, int] = {}
    gt_len: dict = {}
    hyp_len: dict = {}

    frames = sorted(set(gt_f) | set(hyp_f))
    for f in frames:
        g = gt_f.get(f, {})
        h = hyp_f.get(f, {})
        gids = list(g)
        hids = list(h)
        for gi in gids:
            gt_len[gi] = gt_len.get(gi, 0) + 1
        for hi in hids:
            hyp_len[hi] = hyp_len.get(hi, 0) + 1
        sims = kernels.pairwise([tuple(g[i]) for i in gids], [tuple(h[j]) for j in hids], False)
        for a, gi in enumerate(gids):
            row = sims[a]
            for b, hi in enumerate(hids):
                if row[b] >= iou_threshold:
                    pair_counts[(gi, hi)] = pair_counts.get((gi, hi), 0) + 1

        gidx = {gi: a for a, gi in enumerate(gids)}
        hidx = {hi: b for b, hi in enumerate(hids)}
        matched: dict = {}
        for gi, hi in prev.items():
            if gi in gidx and hi in hidx and sims[gidx[gi]][hidx[hi]] >= iou_threshold:
                matched[gi] = hi
        free_g = [gi for gi in gids if gi not in matched]
        taken = set(matched.values())
        free_h = [hi for hi in hids if hi not in taken]
        if free_g and free_h:
            cost = np.full((len(free_g), len(free_h)), INFEASIBLE)
            for a, gi in enumerate(free_g):
                row = sims[gidx[gi]]
                for b, hi in enumerate(free_h):
                    s = row[hidx[hi]]
                    if s >= iou_threshold:
                        cost[a, b] = 1.0 - s
            for a, b in solve(cost).matches:
                matched[free_g[a]] = free_h[b]

        for gi in gids:
            hi = matched.get(gi)
            if hi is None:
                fn += 1
                if was_matched.get(gi):
                    frag += 1
                was_matched[gi] = False
                continue
            if gi in last_hyp and last_hyp[gi] != hi:
                idsw += 1
            last_hyp[gi] = hi
            was_matched[gi] = True
            nmatch += 1
            if motp_mode == "distance":
                motp_sum += _center_dist(g[gi], h[hi])
            else:
                motp_sum += sims[gidx[gi]][hidx[hi]]
        fp += len(hids) - len(matched)
        prev = matched

    # global one-to-one id mapping maximising co-occurring matched frames
    g_ids = sorted(gt_len)
    h_ids = sorted(hyp_len)
    idtp = 0
    if pair_counts:
        gi_idx = {gi: a for a, gi in enumerate(g_ids)}
        hi_idx = {hi: b for b, hi in enumerate(h_ids)}
        top = max(pair_counts.values())
        cost = np.full((len(g_ids), len(h_ids)), float(top))
        for (gi, hi), n in pair_counts.items():
            cost[gi_idx[gi], hi_idx[hi]] = float(top - n)
        for a, b in solve(cost).matches:
            idtp += pair_counts.get((g_ids[a], h_ids[b]), 0)
    idp = idtp / hyp_count if hyp_count else 0.0
    idr = idtp / gt_count
    idf1 = 2.0 * idtp / (gt_count + hyp_count)

    motp = motp_sum / nmatch if nmatch else (0.0 if motp_mode == "overlap" else math.nan)
    return MotReport(
        mota=1.0 - (fn + fp + idsw) / gt_count,
        motp=motp,
        fn_count=fn,
        fp_count=fp,
        idsw=idsw,
        frag=frag,
        idf1=idf1,
        idp=idp,
        idr=idr,
        gt_count=gt_count,
        hyp_count=hyp_count,
        matches=nmatch,
        frames=len(frames),
        gt_ids=len(g_ids),
        hyp_ids=len(h_ids),
        motp_mode=motp_mode,
    )


# ---------------------------------------------------------------- trajectories

@dataclass
class Trajectory:
    person_id: int
    points: list[tuple[int, float, float]] = field(default_factory=list)

    def __post_init__(self):
        frames = [p[0] for p in self.points]
        if any(b <= a for a, b in zip(frames, frames[1:])):
            raise ValueError(f"trajectory {self.person_id}: frames must be strictly increasing")

    @property
    def frames(self) -> list[int]:
        return [p[0] for p in self.points]

    def xy(self) -> np.ndarray:
        return np.array([(x, y) for _, x, y in self.points], dtype=float).reshape(-1, 2)


@dataclass
class RigidTransform2D:
    angle: float = 0.0
    translation: tuple[float, float] = (0.0, 0.0)
    scale: float = 1.0

    @property
    def rotation(self) -> np.ndarray:
        c, s = math.cos(self.angle), math.sin(self.angle)
        return np.array([[c, -s], [s, c]])

    def apply(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        return self.scale * pts @ self.rotation.T + np.asarray(self.translation)


def umeyama_align(src, dst, with_scale: bool = False) -> RigidTransform2D:
    """Least-squares similarity (or rigid) transform taking ``src`` onto ``dst``."""
    src = np.asarray(src, dtype=float).reshape(-1, 2)
    dst = np.asarray(dst, dtype=float).reshape(-1, 2)
    if src.shape != dst.shape:
        raise ValueError("src and dst must have the same number of points")
    if len(src) < 2:
        raise ValueError("need at least two point pairs")
    mu_s = src.mean(axis=0)
    mu_d = dst.mean(axis=0)
    xs = src - mu_s
    xd = dst - mu_d
    var_s = float((xs ** 2).sum()) / len(src)
    if var_s <= 0.0 or float((xd ** 2).sum()) <= 0.0:
        raise ValueError("degenerate point set: all points coincide")
    if np.array_equal(src, dst):
        return RigidTransform2D()
    cov = xd.T @ xs / len(src)
    U, S, Vt = np.linalg.svd(cov)
    d = np.ones(2)
    if np.linalg.det(U) * np.linalg.det(Vt) < 0:
        d[1] = -1.0
    R = U @ np.diag(d) @ Vt
    scale = float((S * d).sum() / var_s) if with_scale else 1.0
    t = mu_d - scale * R @ mu_s
    return RigidTransform2D(math.atan2(R[1, 0], R[0, 0]), (float(t[0]), float(t[1])), scale)


def _paired(gt, est) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(gt, Trajectory) and isinstance(est, Trajectory):
        if gt.frames != est.frames:
            raise ValueError("trajectories must share frame indices")
        return gt.xy(), est.xy()
    g = np.asarray(gt.xy() if isinstance(gt, Trajectory) else gt, dtype=float).reshape(-1, 2)
    e = np.asarray(est.xy() if isinstance(est, Trajectory) else est, dtype=float).reshape(-1, 2)
    if g.shape != e.shape:
        raise ValueError("trajectories must have the same length")
    return g, e


def _align_first_two(g: np.ndarray, e: np.ndarray) -> RigidTransform2D:
    # position + heading from the first two samples; a stationary start
    # leaves no heading, so only the position is aligned
    try:
        return umeyama_align(e[:2], g[:2])
    except ValueError:
        d = g[0] - e[0]
        return RigidTransform2D(0.0, (float(d[0]), float(d[1])))


def segment_error(gt, est, seg_len: int = 100, mode: str = "whole", keep_partial: bool = True) -> float:
    """Mean per-point error in mm after aligning each segment of ``seg_len`` frames.

    ``mode='first_two'`` aligns each segment on its first two frames,
    ``mode='whole'`` on all of its frames (rigid, no scale).
    """
    if mode not in ("first_two", "whole"):
        raise ValueError("mode must be 'first_two' or 'whole'")
    if seg_len < 2:
        raise ValueError("seg_len must be >= 2")
    g, e = _paired(gt, est)
    if len(g) < 2:
        raise ValueError("trajectory shorter than 2 frames")
    errs = []
    for start in range(0, len(g), seg_len):
        gs, es = g[start:start + seg_len], e[start:start + seg_len]
        if len(gs) < 2 or (len(gs) < seg_len and not keep_partial):
            continue
        if mode == "first_two":
            tf = _align_first_two(gs, es)
        else:
            try:
                tf = umeyama_align(es, gs)
            except ValueError:
                d = gs.mean(axis=0) - es.mean(axis=0)
                tf = RigidTransform2D(0.0, (float(d[0]), float(d[1])))
        err = np.linalg.norm(tf.apply(es) - gs, axis=1)
        errs.append(float(err.mean()) * MM_PER_CELL)
    if not errs:
        raise ValueError("no segment with at least 2 frames")
    return float(np.mean(errs))


def rte(gt, est) -> float:
    """Root translation error in percent of the ground-truth path length."""
    g, e = _paired(gt, est)
    if len(g) < 2:
        raise ValueError("trajectory shorter than 2 frames")
    length = float(np.linalg.norm(np.diff(g, axis=0), axis=1).sum())
    if length <= 0.0:
        raise ValueError("ground-truth path has zero length")
    tf = _align_first_two(g, e)
    final = tf.apply(e[-1:])[0]
    return 100.0 * float(np.linalg.norm(final - g[-1])) / length


@dataclass
class TrajReport:
    w_error_mm: float
    wa_error_mm: float
    rte_pct: float
    per_person: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return asdict(self)


def evaluate_trajectories(gt: Mapping[int, Sequence], est: Mapping[int, Sequence],
                          seg_len: int = 100, keep_partial: bool = True) -> TrajReport:
    """Per-person and mean trajectory errors for persons present in both maps."""
    per = {}
    for pid in sorted(set(gt) & set(est)):
        g = gt[pid] if isinstance(gt[pid], Trajectory) else Trajectory(pid, list(gt[pid]))
        e = est[pid] if isinstance(est[pid], Trajectory) else Trajectory(pid, list(est[pid]))
        frames = sorted(set(g.frames) & set(e.frames))
        gmap = {f: (x, y) for f, x, y in g.points}
        emap = {f: (x, y) for f, x, y in e.points}
        gp = np.array([gmap[f] for f in frames], dtype=float)
        ep = np.array([emap[f] for f in frames], dtype=float)
        if len(frames) < 2:
            continue
        per[pid] = {
            "w_error_mm": segment_error(gp, ep, seg_len, "first_two", keep_partial),
            "wa_error_mm": segment_error(gp, ep, seg_len, "whole", keep_partial),
            "rte_pct": rte(gp, ep),
        }
    if not per:
        raise ValueError("no person with at least 2 shared frames")
    mean = lambda k: float(np.mean([v[k] for v in per.values()]))  # noqa: E731
    return TrajReport(mean("w_error_mm"), mean("wa_error_mm"), mean("rte_pct"), per)
