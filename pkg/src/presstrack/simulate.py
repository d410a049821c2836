"""Deterministic multi-person walking simulator for a pressure mat.

People walk along scenario-specific waypoint paths.  Each footstep is
planted for one step period plus a double-support overlap, so the set of
planted feet alternates between two (double support) and one (single
support).  That alternation produces the abrupt box-size changes, and a
foot that leaves the mat reappears a full stride ahead, producing the
jump-like box motion.  A planted foot is rendered as truncated elliptical
Gaussian bumps (heel, forefoot and, unless the arch splits the print, a
midfoot bridge) whose amplitude is scaled so the person's total pressure
equals their weight.

Units: one cell is 1 cm; pressure is in arbitrary force units per cell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import NamedTuple

import numpy as np

from .frames import MAT_HEIGHT, MAT_WIDTH, PressureSequence, SparseFrame
from .geometry import Box
from .io import MotRow
from .labelgen import PersonAnnotation
from .tracker import Detection

__all__ = [
    "SCENARIOS",
    "SimConfig",
    "NoiseConfig",
    "Footstep",
    "GroundTruth",
    "simulate",
    "corrupt_detections",
    "gt_rows",
    "ConfigError",
]

SCENARIOS = ("cross", "follow", "side_by_side", "random_waypoints")

# Foot geometry in cells, in a foot frame with u along the foot (toes at +u)
# and v across it.  (u0, a_u, a_v, peak)
_HEEL = (-7.5, 4.5, 3.5, 1.0)
_FORE = (6.0, 5.5, 4.5, 0.9)
_MID = (-0.5, 5.0, 2.5, 0.35)
_ANKLE_U = -6.0
_TOE_U = 7.0
_HALF_STANCE = 7.0   # lateral offset of each foot from the walking line
_FOOT_REACH = 12.5   # farthest foot cell from the foot centre
_END_MARGIN = 35.0   # turning points are this far from the mat ends

JOINT_NAMES = ("l_ankle", "l_toe", "r_ankle", "r_toe")


class ConfigError(ValueError):
    pass


@dataclass
class SimConfig:
    n_persons: int = 3
    height: int = MAT_HEIGHT
    width: int = MAT_WIDTH
    fps: float = 25.0
    duration: float = 120.0
    weight_range: tuple[float, float] = (450.0, 850.0)
    speed_range: tuple[float, float] = (80.0, 130.0)
    step_length_range: tuple[float, float] = (100.0, 130.0)
    double_support_fraction: float = 0.2
    arch_split_prob: float = 0.3
    scenario: str = "cross"
    exit_reentry_prob: float = 0.0
    min_separation: float = 20.0
    seed: int = 0

    @property
    def n_frames(self) -> int:
        return int(round(self.duration * self.fps))

    def validate(self) -> "SimConfig":
        if self.n_persons < 0 or int(self.n_persons) != self.n_persons:
            raise ConfigError("n_persons: must be a non-negative integer")
        if self.height <= 0 or self.width <= 0:
            raise ConfigError("height/width: must be positive")
        if not self.fps > 0:
            raise ConfigError("fps: must be positive")
        if not self.duration >= 0:
            raise ConfigError("duration: must be non-negative")
        for name in ("weight_range", "speed_range", "step_length_range"):
            lo, hi = getattr(self, name)
            if not 0 < lo <= hi:
                raise ConfigError(f"{name}: needs 0 < low <= high")
        for name in ("double_support_fraction", "arch_split_prob", "exit_reentry_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name}: must lie in [0, 1]")
        if self.double_support_fraction >= 1.0:
            raise ConfigError("double_support_fraction: must be below 1")
        if self.scenario not in SCENARIOS:
            raise ConfigError(f"scenario: expected one of {SCENARIOS}, got {self.scenario!r}")
        if self.min_separation < 0:
            raise ConfigError("min_separation: must be non-negative")
        return self


@dataclass
class NoiseConfig:
    """Detector error model.

    Defaults follow the reference detector quality: 7.8% of true boxes are
    dropped (92.2% recall), and when ``fp_rate`` is None the false-positive
    rate is derived per sequence so that precision is ``target_precision``.
    """

    drop_rate: float = 0.078
    fp_rate: float | None = None
    target_precision: float = 0.936
    jitter_sigma: float = 0.5
    conf_true_mean: float = 0.85
    conf_true_sd: float = 0.1
    conf_false_mean: float = 0.45
    conf_false_sd: float = 0.15

    def validate(self) -> "NoiseConfig":
        if not 0.0 <= self.drop_rate <= 1.0:
            raise ConfigError("drop_rate: must lie in [0, 1]")
        if self.fp_rate is not None and self.fp_rate < 0:
            raise ConfigError("fp_rate: must be non-negative")
        if not 0.0 < self.target_precision <= 1.0:
            raise ConfigError("target_precision: must lie in (0, 1]")
        for name in ("jitter_sigma", "conf_true_sd", "conf_false_sd"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name}: must be non-negative")
        return self

    @classmethod
    def identity(cls) -> "NoiseConfig":
        return cls(drop_rate=0.0, fp_rate=0.0, jitter_sigma=0.0, conf_true_mean=1.0, conf_true_sd=0.0)


class Footstep(NamedTuple):
    index: int
    side: int  # +1 left, -1 right
    x: float
    y: float
    heading: float  # radians, direction of travel
    split: bool
    land: float  # seconds
    lift: float


@dataclass
class _Person:
    pid: int
    weight: float
    speed: float
    stride: float
    path: np.ndarray  # (k, 2) polyline
    cum: np.ndarray  # arc length at each vertex
    s0: float
    first_side: int
    split_draws: np.ndarray
    steps: dict = field(default_factory=dict)
    blobs: dict = field(default_factory=dict)

    @property
    def step_time(self) -> float:
        return 0.5 * self.stride / self.speed


@dataclass
class GroundTruth:
    annotations: dict[int, list[PersonAnnotation]]
    labels: dict[int, dict[int, Box]]
    owners: list[np.ndarray]  # aligned with each SparseFrame's cells
    trajectories: dict[int, list[tuple[int, float, float]]]
    planted: dict[int, dict[int, int]]  # frame -> pid -> planted feet count
    clipped: dict[int, dict[int, bool]]  # frame -> pid -> some planted cell off-mat
    weights: dict[int, float]
    footsteps: dict[int, list[Footstep]]
    persons: dict[int, dict] = field(default_factory=dict)


# ---------------------------------------------------------------- paths

def _person_rng(seed: int, pid: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(pid,))))


def _lane_x(cfg: SimConfig, i: int) -> float:
    return cfg.width * (i + 0.5) / cfg.n_persons


def _check_fit(cfg: SimConfig) -> None:
    n = cfg.n_persons
    if n == 0:
        return
    need = 2 * _HALF_STANCE + cfg.min_separation
    if cfg.scenario == "follow":
        x0, x1 = 30.0, cfg.width - 30.0
        y0, y1 = _END_MARGIN, cfg.height - _END_MARGIN
        if x1 - x0 < need or y1 - y0 < need:
            raise ConfigError("mat too small for the follow loop")
        perimeter = 2 * ((x1 - x0) + (y1 - y0))
        gap = 0.5 * cfg.step_length_range[1] + 2 * _FOOT_REACH + cfg.min_separation
        if n > 1 and perimeter / n < gap:
            raise ConfigError(f"{n} persons cannot keep {cfg.min_separation} cells apart on the follow loop")
        return
    if cfg.height - 2 * _END_MARGIN < 40:
        raise ConfigError("mat too short for walking lanes")
    spacing = cfg.width / n
    if n > 1 and spacing < need:
        raise ConfigError(
            f"{n} persons cannot keep {cfg.min_separation} cells apart on a {cfg.width}-cell wide mat"
        )
    if spacing < 2 * (_HALF_STANCE + 4.5):
        raise ConfigError("lanes narrower than a stance")


def _waypoints(cfg: SimConfig, i: int, rng: np.random.Generator, length: float) -> np.ndarray:
    ylo, yhi = _END_MARGIN, cfg.height - _END_MARGIN
    sc = cfg.scenario
    pts: list[tuple[float, float]] = []
    if sc == "follow":
        x0, x1 = 30.0, cfg.width - 30.0
        loop = [(x0, ylo), (x1, ylo), (x1, yhi), (x0, yhi)]
        laps = int(length // (2 * ((x1 - x0) + (yhi - ylo)))) + 2
        pts = loop * laps + [loop[0]]
    elif sc == "random_waypoints":
        x = _lane_x(cfg, i)
        amp = max(0.0, 0.5 * (cfg.width / cfg.n_persons - 2 * _HALF_STANCE - cfg.min_separation))
        amp = min(amp, 0.5 * cfg.width - _HALF_STANCE - 6.0)
        pts = [(x, ylo if i % 2 == 0 else yhi)]
        total = 0.0
        while total < length:
            for _ in range(100):
                nx = x + rng.uniform(-amp, amp)
                ny = rng.uniform(ylo, yhi)
                d = math.hypot(nx - pts[-1][0], ny - pts[-1][1])
                if d >= 40.0:
                    break
            pts.append((nx, ny))
            total += d
    else:
        x = _lane_x(cfg, i)
        down = sc != "cross" or i % 2 == 0
        a, b = (ylo, yhi) if down else (yhi, ylo)
        legs = int(length // (yhi - ylo)) + 2
        pts = [(x, a if k % 2 == 0 else b) for k in range(legs + 1)]
    pts_arr = np.array(pts, dtype=float)
    if cfg.exit_reentry_prob > 0 and rng.random() < cfg.exit_reentry_prob and len(pts_arr) > 2:
        # walk off the nearer mat end once, then come back
        j = 1 + int(rng.integers(0, min(len(pts_arr) - 2, 4)))
        y = pts_arr[j, 1]
        pts_arr[j, 1] = -45.0 if y < 0.5 * cfg.height else cfg.height + 45.0
    return pts_arr


def _at(person: _Person, s: float) -> tuple[float, float, float]:
    """Position and heading at arc length ``s`` (clamped to the path)."""
    cum = person.cum
    s = min(max(s, 0.0), float(cum[-1]))
    j = int(np.searchsorted(cum, s, side="right")) - 1
    j = min(max(j, 0), len(cum) - 2)
    p, q = person.path[j], person.path[j + 1]
    seg = cum[j + 1] - cum[j]
    t = (s - cum[j]) / seg if seg > 0 else 0.0
    return (float(p[0] + t * (q[0] - p[0])), float(p[1] + t * (q[1] - p[1])),
            math.atan2(q[1] - p[1], q[0] - p[0]))


# ---------------------------------------------------------------- feet

def _footstep(person: _Person, k: int, ds: float) -> Footstep:
    st = person.steps.get(k)
    if st is None:
        ts = person.step_time
        s = person.s0 + k * 0.5 * person.stride
        x, y, hd = _at(person, s)
        side = person.first_side if k % 2 == 0 else -person.first_side
        # left-hand normal of the heading in image coordinates (y down)
        nx, ny = math.sin(hd), -math.cos(hd)
        draw = person.split_draws[(k + 1) % len(person.split_draws)]
        st = Footstep(k, side, x + side * _HALF_STANCE * nx, y + side * _HALF_STANCE * ny, hd,
                      bool(draw), k * ts, (k + 1 + ds) * ts)
        person.steps[k] = st
    return st


def _foot_points(st: Footstep) -> list[tuple[float, float]]:
    ux, uy = math.cos(st.heading), math.sin(st.heading)
    return [(st.x + _ANKLE_U * ux, st.y + _ANKLE_U * uy), (st.x + _TOE_U * ux, st.y + _TOE_U * uy)]


def _unit_blob(st: Footstep, height: int, width: int):
    """Unit-mass pressure bump of one footstep clipped to the mat.

    Returns ``(flat_index, values, on_mat_fraction)``.
    """
    ux, uy = math.cos(st.heading), math.sin(st.heading)
    r = int(math.ceil(_FOOT_REACH)) + 2
    c0, c1 = int(math.floor(st.x)) - r, int(math.floor(st.x)) + r + 1
    r0, r1 = int(math.floor(st.y)) - r, int(math.floor(st.y)) + r + 1
    cols = np.arange(c0, c1)
    rows = np.arange(r0, r1)
    cc, rr = np.meshgrid(cols, rows)
    dx = cc + 0.5 - st.x
    dy = rr + 0.5 - st.y
    u = dx * ux + dy * uy
    v = -dx * uy + dy * ux
    val = np.zeros(cc.shape)
    parts = [_HEEL, _FORE] if st.split else [_HEEL, _FORE, _MID]
    for u0, au, av, peak in parts:
        q = ((u - u0) / au) ** 2 + (v / av) ** 2
        inside = q <= 1.0
        val[inside] += peak * np.exp(-2.0 * q[inside])
    total = val.sum()
    keep = (val > 0) & (rr >= 0) & (rr < height) & (cc >= 0) & (cc < width)
    vals = val[keep] / total
    flat = (rr[keep] * width + cc[keep]).astype(np.int64)
    frac = float(vals.sum())
    return flat, vals, frac


def _blob(person: _Person, st: Footstep, height: int, width: int):
    b = person.blobs.get(st.index)
    if b is None:
        b = _unit_blob(st, height, width)
        person.blobs[st.index] = b
    return b


def _planted(person: _Person, t: float, ds: float) -> list[tuple[Footstep, float]]:
    """Planted footsteps at time ``t`` with their share of body weight."""
    ts = person.step_time
    k = int(math.floor(t / ts + 1e-12))
    lead = _footstep(person, k, ds)
    trail = _footstep(person, k - 1, ds)
    if t < trail.lift:
        phase = (t - lead.land) / (trail.lift - lead.land)
        w_trail = 0.7 - 0.4 * phase
        return [(trail, w_trail), (lead, 1.0 - w_trail)]
    return [(lead, 1.0)]


def _swing_points(person: _Person, t: float, ds: float) -> list[tuple[float, float]]:
    """Projected joints of the foot in the air, interpolated between plants."""
    ts = person.step_time
    k = int(math.floor(t / ts + 1e-12))
    prev = _footstep(person, k - 1, ds)
    if t < prev.lift:
        return []
    nxt = _footstep(person, k + 1, ds)
    a = (t - prev.lift) / (nxt.land - prev.lift)
    return [
        (p[0] + a * (q[0] - p[0]), p[1] + a * (q[1] - p[1]))
        for p, q in zip(_foot_points(prev), _foot_points(nxt))
    ]


# ---------------------------------------------------------------- main

def _make_person(cfg: SimConfig, i: int, shared: dict) -> _Person:
    pid = i + 1
    rng = _person_rng(cfg.seed, pid)
    weight = float(rng.uniform(*cfg.weight_range))
    speed = float(rng.uniform(*cfg.speed_range))
    stride = float(rng.uniform(*cfg.step_length_range))
    if cfg.scenario in ("follow", "side_by_side"):
        speed, stride = shared.setdefault("gait", (speed, stride))
    length = speed * max(cfg.duration, 1.0) + 4 * stride + 400.0
    path = _waypoints(cfg, i, rng, length)
    seg = np.hypot(*np.diff(path, axis=0).T)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    if cfg.scenario == "follow":
        s0 = i * (cum[4] / max(cfg.n_persons, 1)) + stride
    elif cfg.scenario == "side_by_side":
        s0 = stride
    else:
        s0 = stride + float(rng.uniform(0.0, 0.5)) * (cum[1] - cum[0])
    first_side = 1 if rng.random() < 0.5 else -1
    n_steps = int(cfg.duration * speed / (0.5 * stride)) + 8
    split_draws = rng.random(n_steps + 2) < cfg.arch_split_prob
    return _Person(pid, weight, speed, stride, path, cum, s0, first_side, split_draws)


def simulate(cfg: SimConfig) -> tuple[PressureSequence, GroundTruth]:
    """Render a pressure sequence and its ground truth."""
    cfg.validate()
    _check_fit(cfg)
    H, W = cfg.height, cfg.width
    ds = cfg.double_support_fraction
    shared: dict = {}
    persons = [_make_person(cfg, i, shared) for i in range(cfg.n_persons)]

    frames: list[SparseFrame] = []
    owners: list[np.ndarray] = []
    annotations: dict[int, list[PersonAnnotation]] = {}
    labels: dict[int, dict[int, Box]] = {}
    planted_n: dict[int, dict[int, int]] = {}
    clipped: dict[int, dict[int, bool]] = {}
    trajs: dict[int, list[tuple[int, float, float]]] = {p.pid: [] for p in persons}

    for k in range(1, cfg.n_frames + 1):
        t = (k - 1) / cfg.fps
        flat_parts, val_parts, own_parts = [], [], []
        anns = []
        planted_n[k] = {}
        clipped[k] = {}
        for p in persons:
            feet = _planted(p, t, ds)
            planted_n[k][p.pid] = len(feet)
            clip = False
            joints: list[tuple[float, float]] = []
            names: list[str] = []
            for st, share in feet:
                flat, vals, frac = _blob(p, st, H, W)
                clip = clip or frac < 1.0 - 1e-12
                flat_parts.append(flat)
                val_parts.append(vals * (share * p.weight))
                own_parts.append(np.full(flat.size, p.pid, np.int32))
                side = "l" if st.side > 0 else "r"
                joints.extend(_foot_points(st))
                names.extend((f"{side}_ankle", f"{side}_toe"))
            swing = _swing_points(p, t, ds)
            if swing:
                side = "r" if feet[0][0].side > 0 else "l"
                joints.extend(swing)
                names.extend((f"{side}_ankle", f"{side}_toe"))
            clipped[k][p.pid] = clip
            keep = [(j, n) for j, n in zip(joints, names) if 0 <= j[0] <= W and 0 <= j[1] <= H]
            rx, ry, _ = _at(p, p.s0 + p.speed * t - 0.25 * p.stride)
            trajs[p.pid].append((k, rx, ry))
            if keep:
                order = sorted(keep, key=lambda jn: JOINT_NAMES.index(jn[1]))
                anns.append(PersonAnnotation(p.pid, [j for j, _ in order], (rx, ry), tuple(n for _, n in order)))
        annotations[k] = anns

        if flat_parts:
            flat = np.concatenate(flat_parts)
            vals = np.concatenate(val_parts)
            own = np.concatenate(own_parts)
        else:
            flat = np.zeros(0, np.int64)
            vals = np.zeros(0)
            own = np.zeros(0, np.int32)
        if flat.size:
            uniq, inv = np.unique(flat, return_inverse=True)
            summed = np.bincount(inv, weights=vals, minlength=uniq.size)
            if uniq.size == flat.size:
                owner = np.empty(uniq.size, np.int32)
                owner[inv] = own
            else:
                # shared cell: the larger contributor owns it
                owner = np.zeros(uniq.size, np.int32)
                best = np.full(uniq.size, -1.0)
                for i_, o_, v_ in zip(inv.tolist(), own.tolist(), vals.tolist()):
                    if v_ > best[i_]:
                        best[i_] = v_
                        owner[i_] = o_
            rows = (uniq // W).astype(np.int32)
            cols = (uniq % W).astype(np.int32)
            frames.append(SparseFrame(rows, cols, summed))
            owners.append(owner)
            lab = {}
            for pid in np.unique(owner).tolist():
                sel = owner == pid
                r_, c_ = rows[sel], cols[sel]
                lab[pid] = Box(float(c_.min()), float(r_.min()),
                               float(c_.max() - c_.min() + 1), float(r_.max() - r_.min() + 1))
            labels[k] = lab
        else:
            frames.append(SparseFrame.empty())
            owners.append(np.zeros(0, np.int32))
            labels[k] = {}

    seq = PressureSequence(H, W, float(cfg.fps), frames)
    gt = GroundTruth(
        annotations=annotations,
        labels=labels,
        owners=owners,
        trajectories=trajs,
        planted=planted_n,
        clipped=clipped,
        weights={p.pid: p.weight for p in persons},
        footsteps={p.pid: [p.steps[i] for i in sorted(p.steps)] for p in persons},
        persons={p.pid: {"weight": p.weight, "speed": p.speed, "stride": p.stride} for p in persons},
    )
    return seq, gt


def gt_rows(gt: GroundTruth) -> list[MotRow]:
    """Ground-truth labels as MOT rows with ``conf = 1``."""
    return [
        MotRow.of(k, pid, box, 1.0)
        for k in sorted(gt.labels)
        for pid, box in sorted(gt.labels[k].items())
    ]


# ---------------------------------------------------------------- detector noise

def corrupt_detections(labels, noise: NoiseConfig, seed: int, n_frames: int | None = None,
                       mat: tuple[int, int] = (MAT_HEIGHT, MAT_WIDTH)) -> dict[int, list[Detection]]:
    """Turn ground-truth labels into noisy detections.

    ``labels`` is a mapping frame -> {person: Box} or a list of MOT rows.
    Each true box survives with probability ``1 - drop_rate``, gets Gaussian
    jitter on each edge and a confidence; ``Poisson(fp_rate)`` false boxes
    with footprint-like sizes are added per frame.  Every frame ``1..n_frames``
    is present in the output, possibly empty.
    """
    noise.validate()
    if not isinstance(labels, dict):
        grouped: dict[int, dict[int, Box]] = {}
        for r in labels:
            grouped.setdefault(r.frame, {})[r.id] = r.box
        labels = grouped
    if n_frames is None:
        n_frames = max(labels, default=0)
    H, W = mat
    rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(0xD7,))))
    n_gt = sum(len(labels.get(k, {})) for k in range(1, n_frames + 1))
    fp_rate = noise.fp_rate
    if fp_rate is None:
        mean_gt = n_gt / n_frames if n_frames else 0.0
        p = noise.target_precision
        fp_rate = (1.0 - noise.drop_rate) * mean_gt * (1.0 - p) / p

    out: dict[int, list[Detection]] = {}
    sig = noise.jitter_sigma
    for k in range(1, n_frames + 1):
        dets = []
        for pid, box in sorted(labels.get(k, {}).items()):
            # draw everything up front so the stream does not depend on outcomes
            drop = rng.random() < noise.drop_rate
            jit = rng.normal(0.0, 1.0, 4) * sig
            conf = noise.conf_true_mean + noise.conf_true_sd * rng.normal()
            if drop:
                continue
            x0, y0 = box.x + jit[0], box.y + jit[1]
            x1, y1 = box.x + box.w + jit[2], box.y + box.h + jit[3]
            if x1 - x0 < 0.5:
                x1 = x0 + 0.5
            if y1 - y0 < 0.5:
                y1 = y0 + 0.5
            dets.append(Detection(k, Box(float(x0), float(y0), float(x1 - x0), float(y1 - y0)),
                                  float(min(1.0, max(0.0, conf)))))
        for _ in range(int(rng.poisson(fp_rate)) if fp_rate > 0 else 0):
            w = float(rng.uniform(8.0, 24.0))
            h = float(rng.uniform(20.0, 70.0))
            x = float(rng.uniform(0.0, W - w))
            y = float(rng.uniform(0.0, H - h))
            conf = noise.conf_false_mean + noise.conf_false_sd * rng.normal()
            dets.append(Detection(k, Box(x, y, w, h), float(min(1.0, max(0.0, conf)))))
        out[k] = dets
    return out


def config_fields(cls) -> list[str]:
    return [f.name for f in fields(cls)]
