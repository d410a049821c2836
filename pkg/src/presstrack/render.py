"""PNG snapshots of pressure frames with colored track boxes."""

from __future__ import annotations

import colorsys
from pathlib import Path
from typing import Iterable

import numpy as np
from PIL import Image, ImageDraw

from .frames import PressureSequence

__all__ = ["id_color", "render_frame", "render_sequence"]

_GOLDEN = 0.618033988749895


def id_color(track_id: int) -> tuple[int, int, int]:
    """Deterministic, well-spread RGB color for a track id."""
    hue = (track_id * _GOLDEN) % 1.0
    r, g, b = colorsys.hsv_to_rgb(hue, 0.85, 1.0)
    return int(round(r * 255)), int(round(g * 255)), int(round(b * 255))


def render_frame(grid: np.ndarray, boxes: Iterable = (), scale: int = 3, vmax: float | None = None) -> Image.Image:
    """Grayscale pressure heat (black = no load) with ``(id, Box)`` outlines.

    Each mat cell becomes a ``scale`` x ``scale`` block.  ``vmax`` fixes the
    white point; by default the frame maximum is used.
    """
    grid = np.asarray(grid, dtype=float)
    top = float(grid.max()) if vmax is None else float(vmax)
    if top > 0:
        gray = np.clip(grid / top, 0.0, 1.0) * 255.0
    else:
        gray = np.zeros_like(grid)
    gray = np.rint(gray).astype(np.uint8)
    gray = np.repeat(np.repeat(gray, scale, axis=0), scale, axis=1)
    img = Image.fromarray(gray, mode="L").convert("RGB")
    draw = ImageDraw.Draw(img)
    for tid, box in boxes:
        x0 = int(round(box.x * scale))
        y0 = int(round(box.y * scale))
        x1 = int(round((box.x + box.w) * scale)) - 1
        y1 = int(round((box.y + box.h) * scale)) - 1
        draw.rectangle([x0, y0, max(x0, x1), max(y0, y1)], outline=id_color(tid), width=1)
    return img


def render_sequence(seq: PressureSequence, tracks: Iterable, out_dir, scale: int = 3) -> list[Path]:
    """Write ``frame_<k>.png`` for every frame; returns the paths in frame order.

    The white point is the sequence-wide maximum so brightness is comparable
    across frames.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    by_frame: dict[int, list] = {}
    for row in tracks:
        by_frame.setdefault(row.frame, []).append((row.id, row.box))
    vmax = max((float(f.values.max()) for f in seq.frames if f.nnz), default=0.0)
    width = len(str(max(len(seq), 1)))
    paths = []
    for k, grid in seq:
        img = render_frame(grid, sorted(by_frame.get(k, []), key=lambda t: t[0]), scale, vmax)
        path = out_dir / f"frame_{k:0{width}d}.png"
        img.save(path, format="PNG")
        paths.append(path)
    return paths
