"""Footprint tracking on pressure-sensing floor mats."""

from ._backend import BACKEND
from .assign import INFEASIBLE, Assignment, solve
from .geometry import Box, enclosure, iou, merge_boxes, uoe
from .metrics import MotReport, clearmot
from .simulate import NoiseConfig, SimConfig, corrupt_detections, simulate
from .tracker import Detection, Tracker, TrackerConfig, run

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "INFEASIBLE",
    "Assignment",
    "Box",
    "Detection",
    "MotReport",
    "NoiseConfig",
    "SimConfig",
    "Tracker",
    "TrackerConfig",
    "clearmot",
    "corrupt_detections",
    "enclosure",
    "iou",
    "merge_boxes",
    "run",
    "simulate",
    "solve",
    "uoe",
]
