"""Streaming footprint association.

The default strategy compares each track's last box directly with the
current detections using UoE, weighted by detection confidence, and solves
the gated assignment.  There is deliberately no motion model: footprint
boxes jump and resize abruptly between gait phases.  The ``ioukalman``
strategy is a SORT-style baseline (IoU against a constant-velocity Kalman
prediction) that runs through the same lifecycle and output schema.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from . import kalman
from ._backend import kernels
from .assign import INFEASIBLE
from .geometry import Box

__all__ = [
    "Detection",
    "TrackState",
    "TrackRecord",
    "TrackEvent",
    "TrackerConfig",
    "Tracker",
    "TrackRow",
    "build_cost",
    "run",
    "STRATEGIES",
]

log = logging.getLogger(__name__)

STRATEGIES = ("uoe", "ioukalman")


class Detection(NamedTuple):
    frame: int
    box: Box
    conf: float


class TrackRow(NamedTuple):
    frame: int
    id: int
    box: Box


class TrackState(enum.Enum):
    ACTIVE = "active"
    LOST = "lost"
    REMOVED = "removed"


class TrackEvent(NamedTuple):
    frame: int
    kind: str  # "spawn", "lost", "resume", "removed"
    track_id: int


@dataclass
class TrackerConfig:
    strategy: str = "uoe"
    match_threshold: float = 0.3
    conf_discard: float = 0.1
    conf_spawn: float = 0.6
    max_lost: int = 30

    def validate(self) -> "TrackerConfig":
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy: expected one of {STRATEGIES}, got {self.strategy!r}")
        if not 0.0 < self.match_threshold < 1.0:
            raise ValueError("match_threshold: must lie in (0, 1)")
        for name in ("conf_discard", "conf_spawn"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}: must lie in [0, 1]")
        if self.conf_discard > self.conf_spawn:
            raise ValueError("conf_discard: must not exceed conf_spawn")
        if int(self.max_lost) != self.max_lost or self.max_lost < 0:
            raise ValueError("max_lost: must be a non-negative integer")
        return self


@dataclass(eq=False, slots=True)
class TrackRecord:
    id: int
    box: Box
    state: TrackState = TrackState.ACTIVE
    lost_frames: int = 0
    history: list = field(default_factory=list)
    # baseline only
    kf: kalman.KalmanState | None = None
    pred: Box | None = None

    @property
    def match_box(self) -> Box:
        """Box compared against detections: the prediction if there is one."""
        return self.pred if self.pred is not None else self.box


def build_cost(tracks: Sequence[TrackRecord], dets: Sequence[Detection], cfg: TrackerConfig) -> np.ndarray:
    """Cost matrix ``1 - sim * conf`` with gated entries set to INFEASIBLE.

    ``sim`` is UoE against the track's last box, or IoU against the Kalman
    prediction for the baseline.
    """
    for t in tracks:
        if t.state is TrackState.REMOVED:
            raise ValueError(f"track {t.id} is removed")
    sims = kernels.pairwise(
        [tuple(t.match_box) for t in tracks],
        [tuple(d.box) for d in dets],
        cfg.strategy == "uoe",
    )
    cost = np.full((len(tracks), len(dets)), INFEASIBLE)
    for i, row in enumerate(sims):
        for j, s in enumerate(row):
            fused = s * float(dets[j].conf)
            if fused >= cfg.match_threshold:
                cost[i, j] = 1.0 - fused
    return cost


class Tracker:
    """Sequential tracking state machine; call :meth:`step` once per frame."""

    def __init__(self, cfg: TrackerConfig | None = None):
        self.cfg = (cfg or TrackerConfig()).validate()
        self._use_uoe = self.cfg.strategy == "uoe"
        self._tracks: list[TrackRecord] = []
        self._next_id = 1
        self._last_frame: int | None = None

    @property
    def tracks(self) -> list[TrackRecord]:
        """Live (active or lost) tracks, oldest first."""
        return list(self._tracks)

    def step(self, frame: int, dets: Sequence[Detection]) -> tuple[list[TrackRecord], list[TrackEvent]]:
        if self._last_frame is not None and frame <= self._last_frame:
            raise ValueError(f"frame {frame} does not follow frame {self._last_frame}")
        self._last_frame = frame
        cfg = self.cfg
        tracks = self._tracks
        events: list[TrackEvent] = []

        # Detections below conf_discard never take part in association.
        if any(d.conf < cfg.conf_discard for d in dets):
            dets = [d for d in dets if d.conf >= cfg.conf_discard]

        if not self._use_uoe:
            for t in tracks:
                t.kf = kalman.predict(t.kf)
                t.pred = kalman.cv_predict(t.kf, 0)

        matches = kernels.associate(
            [t.match_box for t in tracks],
            [(d.box.x, d.box.y, d.box.w, d.box.h, d.conf) for d in dets],
            cfg.match_threshold,
            self._use_uoe,
        )

        hit = [False] * len(tracks)
        used = [False] * len(dets)
        active: list[TrackRecord] = []
        for i, j, _ in matches:
            t = tracks[i]
            box = dets[j].box
            hit[i] = True
            used[j] = True
            if t.state is TrackState.LOST:
                events.append(TrackEvent(frame, "resume", t.id))
            t.box = box
            t.state = TrackState.ACTIVE
            t.lost_frames = 0
            t.history.append((frame, box))
            if t.kf is not None:
                t.kf = kalman.update(t.kf, box)
            active.append(t)

        survivors = []
        for t, h in zip(tracks, hit):
            if h:
                survivors.append(t)
                continue
            t.lost_frames += 1
            if t.lost_frames > cfg.max_lost:
                t.state = TrackState.REMOVED
                events.append(TrackEvent(frame, "removed", t.id))
                continue
            if t.state is TrackState.ACTIVE:
                events.append(TrackEvent(frame, "lost", t.id))
            t.state = TrackState.LOST
            survivors.append(t)

        for d, u in zip(dets, used):
            # Mid-confidence leftovers are dropped the same as low ones.
            if u or d.conf < cfg.conf_spawn:
                continue
            t = TrackRecord(self._next_id, d.box, history=[(frame, d.box)])
            self._next_id += 1
            if not self._use_uoe:
                t.kf = kalman.initiate(d.box)
            survivors.append(t)
            active.append(t)
            events.append(TrackEvent(frame, "spawn", t.id))

        self._tracks = survivors
        if len(active) > 1:
            active.sort(key=lambda t: t.id)
        return active, events


def _frames_of(stream) -> Iterable[tuple[int, Sequence[Detection]]]:
    if isinstance(stream, Mapping):
        return sorted(stream.items())
    return stream


def run(stream, cfg: TrackerConfig | None = None) -> list[TrackRow]:
    """Track a whole detection stream.

    ``stream`` is either a mapping ``frame -> detections`` or an iterable of
    ``(frame, detections)`` pairs in ascending frame order.  Returns one row
    per active track per frame; lost tracks are not emitted while lost.
    """
    tracker = Tracker(cfg)
    out: list[TrackRow] = []
    for frame, dets in _frames_of(stream):
        active, _ = tracker.step(frame, dets)
        for t in active:
            out.append(TrackRow(frame, t.id, t.box))
    return out


def group_detections(dets: Iterable[Detection], frames: Iterable[int] = ()) -> dict[int, list[Detection]]:
    """Group a flat detection list by frame; ``frames`` adds empty frames."""
    out: dict[int, list[Detection]] = {f: [] for f in frames}
    for d in dets:
        out.setdefault(d.frame, []).append(d)
    return dict(sorted(out.items()))
