"""Constant-velocity Kalman filter over (cx, cy, area, aspect).

Only the IoU baseline uses this.  State layout follows SORT:
``[cx, cy, area, aspect, vcx, vcy, varea]`` with aspect = w / h held
constant by the motion model.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .geometry import Box

__all__ = ["KalmanState", "AreaClampWarning", "initiate", "predict", "update", "cv_predict", "state_box"]

MIN_AREA = 1e-3

_F = np.eye(7)
_F[0, 4] = _F[1, 5] = _F[2, 6] = 1.0
_H = np.eye(4, 7)
_R = np.diag([1.0, 1.0, 10.0, 10.0])
_Q = np.diag([1.0, 1.0, 1.0, 1.0, 0.01, 0.01, 1e-4])
_P0 = np.diag([10.0, 10.0, 10.0, 10.0, 1e4, 1e4, 1e4])


class AreaClampWarning(RuntimeWarning):
    """Predicted area went non-positive and was clamped."""


@dataclass
class KalmanState:
    mean: np.ndarray
    covariance: np.ndarray


def _measure(box: Box) -> np.ndarray:
    cx, cy = box.center
    return np.array([cx, cy, box.w * box.h, box.w / box.h])


def state_box(mean: np.ndarray) -> Box:
    area = float(mean[2])
    aspect = float(mean[3])
    w = math.sqrt(area * aspect)
    h = area / w
    return Box(float(mean[0]) - w / 2.0, float(mean[1]) - h / 2.0, w, h)


def initiate(box: Box) -> KalmanState:
    mean = np.zeros(7)
    mean[:4] = _measure(box)
    return KalmanState(mean, _P0.copy())


def predict(ks: KalmanState) -> KalmanState:
    mean = ks.mean.copy()
    if mean[2] + mean[6] <= 0:
        mean[6] = 0.0
    mean = _F @ mean
    cov = _F @ ks.covariance @ _F.T + _Q
    return KalmanState(mean, cov)


def update(ks: KalmanState, box: Box) -> KalmanState:
    z = _measure(box)
    s = _H @ ks.covariance @ _H.T + _R
    gain = np.linalg.solve(s, _H @ ks.covariance).T
    mean = ks.mean + gain @ (z - _H @ ks.mean)
    cov = (np.eye(7) - gain @ _H) @ ks.covariance
    cov = 0.5 * (cov + cov.T)
    return KalmanState(mean, cov)


def cv_predict(ks: KalmanState, steps: int) -> Box:
    """Extrapolate ``steps`` frames at constant velocity and return the box.

    A non-positive extrapolated area is clamped to ``MIN_AREA`` and an
    :class:`AreaClampWarning` is issued.
    """
    if steps < 0:
        raise ValueError("steps must be non-negative")
    mean = ks.mean.copy()
    mean[:3] += steps * mean[4:7]
    if mean[2] <= 0:
        warnings.warn(f"predicted area {mean[2]:.4g} clamped to {MIN_AREA}", AreaClampWarning, stacklevel=2)
        mean[2] = MIN_AREA
    return state_box(mean)
