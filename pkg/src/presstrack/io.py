"""Readers and writers for the interchange formats.

* ``.psq``: sparse text pressure sequence (optionally gzip-wrapped).
* MOT CSV: ``frame,id,x,y,w,h,conf`` with 6-decimal fixed floats.
* trajectory CSV ``person_id,frame,x,y`` and annotation CSV
  ``frame,person_id,joint,x,y``.
* crop archive: ``track_<id>/frame_<k>.pgm`` (16-bit binary PGM) plus
  ``centers.csv``.
"""

from __future__ import annotations

import gzip
import os
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .frames import PressureSequence, SparseFrame
from .geometry import Box

__all__ = [
    "FormatError",
    "PsqFormatError",
    "PsqMagicError",
    "PsqTruncatedError",
    "PsqRangeError",
    "CsvFormatError",
    "MotRow",
    "read_psq",
    "write_psq",
    "read_mot_csv",
    "write_mot_csv",
    "read_trajectories",
    "write_trajectories",
    "read_annotations",
    "write_annotations",
    "write_pgm16",
    "read_pgm16",
    "write_crop_archive",
    "PSQ_MAGIC",
    "CROP_SCALE",
]

PSQ_MAGIC = "PSQ1"
#: PGM counts per pressure unit in crop archives.
CROP_SCALE = 100.0


class FormatError(ValueError):
    """Malformed input file; ``lineno`` is 1-based when known."""

    def __init__(self, msg: str, path=None, lineno: int | None = None):
        loc = f"{path}:" if path is not None else ""
        loc += f"{lineno}: " if lineno is not None else (" " if loc else "")
        super().__init__(f"{loc}{msg}")
        self.path = path
        self.lineno = lineno


class PsqFormatError(FormatError):
    pass


class PsqMagicError(PsqFormatError):
    pass


class PsqTruncatedError(PsqFormatError):
    pass


class PsqRangeError(PsqFormatError):
    pass


class CsvFormatError(FormatError):
    pass


def _open_text(path, mode: str):
    path = os.fspath(path)
    if path.endswith(".gz"):
        # mtime=0 keeps gzip output byte-reproducible
        if "w" in mode:
            raw = open(path, "wb")
            return _GzipText(raw)
        return gzip.open(path, "rt", encoding="ascii", newline="")
    return open(path, mode, encoding="ascii", newline="")


class _GzipText:
    def __init__(self, raw):
        self._raw = raw
        self._gz = gzip.GzipFile(fileobj=raw, mode="wb", mtime=0, filename="")

    def write(self, s: str) -> None:
        self._gz.write(s.encode("ascii"))

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self._gz.close()
        self._raw.close()


# ---------------------------------------------------------------- psq

def _fmt_float(v: float) -> str:
    return repr(float(v))


def write_psq(path, seq: PressureSequence) -> None:
    with _open_text(path, "w") as fh:
        fh.write(f"{PSQ_MAGIC} {int(seq.height)} {int(seq.width)} {_fmt_float(seq.fps)} {len(seq.frames)}\n")
        for k, fr in enumerate(seq.frames, start=1):
            lines = [f"F {k}"]
            lines.extend(
                f"{r} {c} {v!r}"
                for r, c, v in zip(fr.rows.tolist(), fr.cols.tolist(), fr.values.tolist())
            )
            lines.append("E")
            fh.write("\n".join(lines))
            fh.write("\n")


def read_psq(path) -> PressureSequence:
    with _open_text(path, "r") as fh:
        lines = fh.read().split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise PsqTruncatedError("empty file", path, 1)
    head = lines[0].split()
    if not head or head[0] != PSQ_MAGIC:
        raise PsqMagicError(f"bad magic {head[0] if head else ''!r}, expected {PSQ_MAGIC}", path, 1)
    if len(head) != 5:
        raise PsqFormatError("header needs: PSQ1 <H> <W> <fps> <N>", path, 1)
    try:
        height, width, fps, n = int(head[1]), int(head[2]), float(head[3]), int(head[4])
    except ValueError as e:
        raise PsqFormatError(f"bad header field: {e}", path, 1) from None
    if height <= 0 or width <= 0 or n < 0 or not fps > 0:
        raise PsqFormatError("header values out of range", path, 1)

    frames: list[SparseFrame] = []
    i = 1
    total = len(lines)
    for k in range(1, n + 1):
        if i >= total:
            raise PsqTruncatedError(f"missing frame {k} of {n}", path, i + 1)
        if lines[i].split() != ["F", str(k)]:
            raise PsqFormatError(f"expected 'F {k}', got {lines[i]!r}", path, i + 1)
        i += 1
        start = i
        while i < total and lines[i] != "E":
            i += 1
        if i >= total:
            raise PsqTruncatedError(f"frame {k} has no terminator", path, total)
        body = lines[start:i]
        rows = np.empty(len(body), np.int32)
        cols = np.empty(len(body), np.int32)
        vals = np.empty(len(body), np.float64)
        for t, line in enumerate(body):
            parts = line.split()
            lineno = start + t + 1
            if len(parts) != 3:
                raise PsqFormatError(f"expected '<row> <col> <value>', got {line!r}", path, lineno)
            try:
                r, c, v = int(parts[0]), int(parts[1]), float(parts[2])
            except ValueError as e:
                raise PsqFormatError(str(e), path, lineno) from None
            if not (0 <= r < height and 0 <= c < width):
                raise PsqRangeError(f"cell ({r}, {c}) outside {height}x{width} mat", path, lineno)
            if not v >= 0 or v == float("inf"):
                raise PsqRangeError(f"pressure must be finite and >= 0, got {parts[2]}", path, lineno)
            rows[t], cols[t], vals[t] = r, c, v
        frames.append(SparseFrame(rows, cols, vals))
        i += 1
    if i != total:
        raise PsqFormatError(f"trailing content after {n} frames", path, i + 1)
    return PressureSequence(height, width, fps, frames)


# ---------------------------------------------------------------- MOT CSV

class MotRow(NamedTuple):
    frame: int
    id: int
    x: float
    y: float
    w: float
    h: float
    conf: float = 1.0

    @property
    def box(self) -> Box:
        return Box(self.x, self.y, self.w, self.h)

    @classmethod
    def of(cls, frame: int, ident: int, box: Box, conf: float = 1.0) -> "MotRow":
        return cls(int(frame), int(ident), float(box.x), float(box.y), float(box.w), float(box.h), float(conf))


def _check_row(row: MotRow, path=None, lineno=None) -> None:
    if row.frame < 1:
        raise CsvFormatError(f"frame must be >= 1, got {row.frame}", path, lineno)
    if not (row.w > 0 and row.h > 0):
        raise CsvFormatError(f"box needs positive size, got w={row.w} h={row.h}", path, lineno)
    if not 0.0 <= row.conf <= 1.0:
        raise CsvFormatError(f"conf must lie in [0, 1], got {row.conf}", path, lineno)


def format_mot_row(r: MotRow) -> str:
    return f"{r.frame:d},{r.id:d},{r.x:.6f},{r.y:.6f},{r.w:.6f},{r.h:.6f},{r.conf:.6f}"


def write_mot_csv(path, rows: Iterable[MotRow]) -> None:
    rows = sorted(rows, key=lambda r: (r.frame, r.id, r.x, r.y))
    with _open_text(path, "w") as fh:
        for r in rows:
            _check_row(r)
            fh.write(format_mot_row(r))
            fh.write("\n")


def read_mot_csv(path) -> list[MotRow]:
    out: list[MotRow] = []
    with _open_text(path, "r") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 7:
                raise CsvFormatError(f"expected 7 fields frame,id,x,y,w,h,conf, got {len(parts)}", path, lineno)
            try:
                row = MotRow(int(parts[0]), int(parts[1]), float(parts[2]), float(parts[3]),
                             float(parts[4]), float(parts[5]), float(parts[6]))
            except ValueError as e:
                raise CsvFormatError(str(e), path, lineno) from None
            _check_row(row, path, lineno)
            out.append(row)
    return out


# ---------------------------------------------------------------- trajectories / annotations

def write_trajectories(path, trajs: dict[int, Sequence[tuple[int, float, float]]]) -> None:
    with _open_text(path, "w") as fh:
        for pid in sorted(trajs):
            for frame, x, y in trajs[pid]:
                fh.write(f"{pid:d},{frame:d},{x:.6f},{y:.6f}\n")


def read_trajectories(path) -> dict[int, list[tuple[int, float, float]]]:
    out: dict[int, list[tuple[int, float, float]]] = {}
    with _open_text(path, "r") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise CsvFormatError(f"expected 4 fields person_id,frame,x,y, got {len(parts)}", path, lineno)
            try:
                pid, frame, x, y = int(parts[0]), int(parts[1]), float(parts[2]), float(parts[3])
            except ValueError as e:
                raise CsvFormatError(str(e), path, lineno) from None
            pts = out.setdefault(pid, [])
            if pts and frame <= pts[-1][0]:
                raise CsvFormatError(f"frames of person {pid} not strictly increasing", path, lineno)
            pts.append((frame, x, y))
    return out


def write_annotations(path, annotations) -> None:
    """``annotations`` maps frame -> list of PersonAnnotation."""
    with _open_text(path, "w") as fh:
        for frame in sorted(annotations):
            for ann in sorted(annotations[frame], key=lambda a: a.person_id):
                for name, (x, y) in zip(ann.joint_names, ann.foot_joints):
                    fh.write(f"{frame:d},{ann.person_id:d},{name},{x:.6f},{y:.6f}\n")


def read_annotations(path, roots: dict[int, list[tuple[int, float, float]]] | None = None):
    """Inverse of :func:`write_annotations`; roots come from a trajectory file."""
    from .labelgen import PersonAnnotation

    joints: dict[int, dict[int, list[tuple[str, float, float]]]] = {}
    with _open_text(path, "r") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 5:
                raise CsvFormatError(f"expected 5 fields frame,person_id,joint,x,y, got {len(parts)}", path, lineno)
            try:
                frame, pid, x, y = int(parts[0]), int(parts[1]), float(parts[3]), float(parts[4])
            except ValueError as e:
                raise CsvFormatError(str(e), path, lineno) from None
            joints.setdefault(frame, {}).setdefault(pid, []).append((parts[2], x, y))
    root_at = {}
    for pid, pts in (roots or {}).items():
        for frame, x, y in pts:
            root_at[(frame, pid)] = (x, y)
    out = {}
    for frame, persons in joints.items():
        out[frame] = [
            PersonAnnotation(
                pid,
                [(x, y) for _, x, y in js],
                root_at.get((frame, pid)),
                tuple(n for n, _, _ in js),
            )
            for pid, js in sorted(persons.items())
        ]
    return out


# ---------------------------------------------------------------- crops

def write_pgm16(path, patch: np.ndarray, scale: float = CROP_SCALE) -> None:
    """Write a 2-D pressure patch as a 16-bit binary PGM (``round(v*scale)``)."""
    q = np.clip(np.rint(np.asarray(patch, float) * scale), 0, 65535).astype(">u2")
    h, w = q.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n65535\n".encode("ascii"))
        fh.write(q.tobytes())


def read_pgm16(path, scale: float = CROP_SCALE) -> np.ndarray:
    data = Path(path).read_bytes()
    fields = []
    pos = 0
    while len(fields) < 4:
        while data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        end = pos
        while not data[end:end + 1].isspace():
            end += 1
        fields.append(data[pos:end])
        pos = end
    pos += 1
    if fields[0] != b"P5":
        raise FormatError(f"not a binary PGM: {fields[0]!r}", path)
    w, h, maxval = int(fields[1]), int(fields[2]), int(fields[3])
    dtype = ">u2" if maxval > 255 else "u1"
    arr = np.frombuffer(data[pos:], dtype=dtype, count=w * h).reshape(h, w)
    return arr.astype(float) / scale


def write_crop_archive(out_dir, crops, scale: float = CROP_SCALE) -> None:
    """Write crops as ``track_<id>/frame_<k>.pgm`` plus ``centers.csv``.

    ``crops`` maps track id -> list of :class:`~presstrack.crops.Crop`.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = []
    for tid in sorted(crops):
        tdir = out_dir / f"track_{tid}"
        tdir.mkdir(exist_ok=True)
        for c in crops[tid]:
            write_pgm16(tdir / f"frame_{c.frame}.pgm", c.patch, scale)
            lines.append(f"{tid:d},{c.frame:d},{c.center[0]:.6f},{c.center[1]:.6f}\n")
    (out_dir / "centers.csv").write_text("".join(lines), encoding="ascii")
