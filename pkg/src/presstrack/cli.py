"""Command-line front end: simulate, labels, corrupt, track, eval, render, bench, pipeline.

Exit codes: 0 success, 2 configuration error, 3 input parse error,
4 runtime or I/O error, 64 command-line usage error.  Log verbosity comes
from the ``PRESSTRACK_LOG`` environment variable (e.g. ``INFO``).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import statistics
import sys
import time
import warnings
from dataclasses import replace
from pathlib import Path

from . import __version__
from ._backend import BACKEND
from .config import ConfigSchemaError, RunConfig, config_dict, read_config
from .crops import extract_crops
from .io import (FormatError, MotRow, read_annotations, read_mot_csv, read_psq, read_trajectories,
                 write_annotations, write_crop_archive, write_mot_csv, write_psq, write_trajectories)
from .labelgen import DEFAULT_TAU, generate_labels
from .metrics import clearmot, evaluate_trajectories
from .render import render_sequence
from .simulate import ConfigError, corrupt_detections, gt_rows, simulate
from .tracker import Detection, STRATEGIES, group_detections, run

log = logging.getLogger("presstrack")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PARSE = 3
EXIT_RUNTIME = 4
EXIT_USAGE = 64

# file names used by simulate and pipeline
SEQ_FILE = "sequence.psq"
GT_FILE = "gt.csv"
ANN_FILE = "annotations.csv"
TRAJ_FILE = "trajectories.csv"
DETS_FILE = "dets.csv"
TRACKS_FILE = "tracks.csv"
REPORT_JSON = "report.json"
REPORT_TXT = "report.txt"
MANIFEST = "manifest.json"

BENCH_FRAMES = 2660


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: {message}")


class _Stage:
    """Collects per-stage wall-clock timings for the manifest."""

    def __init__(self):
        self.timings: dict[str, float] = {}

    def __call__(self, name: str):
        stage = self

        class _Timer:
            def __enter__(self):
                self.t0 = time.perf_counter()
                log.info("stage %s", name)

            def __exit__(self, *exc):
                stage.timings[name] = round(time.perf_counter() - self.t0, 6)

        return _Timer()


def _load_config(args) -> RunConfig:
    cfg = read_config(getattr(args, "config", None))
    seed = getattr(args, "seed", None)
    if seed is not None:
        cfg.sim = replace(cfg.sim, seed=seed)
    strategy = getattr(args, "strategy", None)
    if strategy is not None:
        cfg.tracker = replace(cfg.tracker, strategy=strategy)
    return cfg.validate()


def _write_manifest(path: Path, command: str, cfg: RunConfig | None, inputs: dict, outputs: dict,
                    timer: _Stage, extra: dict | None = None) -> None:
    doc = {
        "command": command,
        "tool_version": __version__,
        "backend": BACKEND,
        "seed": cfg.sim.seed if cfg is not None else None,
        "config": config_dict(cfg) if cfg is not None else None,
        "inputs": {k: str(v) for k, v in sorted(inputs.items())},
        "outputs": {k: str(v) for k, v in sorted(outputs.items())},
        "timings_s": timer.timings,
    }
    if extra:
        doc.update(extra)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _manifest_path(out: Path, explicit) -> Path:
    if explicit:
        return Path(explicit)
    return out / MANIFEST if out.suffix == "" else out.with_name(out.name + ".manifest.json")


def _det_rows(stream: dict[int, list[Detection]]) -> list[MotRow]:
    return [MotRow.of(k, -1, d.box, d.conf) for k, dets in sorted(stream.items()) for d in dets]


def _det_stream(rows: list[MotRow], n_frames: int | None = None) -> dict[int, list[Detection]]:
    last = max((r.frame for r in rows), default=0)
    n = max(last, n_frames or 0)
    return group_detections((Detection(r.frame, r.box, r.conf) for r in rows), range(1, n + 1))


def _track_rows(tracks) -> list[MotRow]:
    return [MotRow.of(t.frame, t.id, t.box, 1.0) for t in tracks]


def _report_text(mot, traj=None) -> str:
    lines = [f"{k}={v}" for k, v in mot.as_dict().items()]
    lines.insert(0, f"MOTA%={100.0 * mot.mota:.3f}")
    lines.insert(1, f"MOTP%={100.0 * mot.motp:.3f}")
    if traj is not None:
        for k in ("w_error_mm", "wa_error_mm", "rte_pct"):
            lines.append(f"{k}={getattr(traj, k)}")
    return "\n".join(lines) + "\n"


def _report_json(mot, traj=None) -> str:
    doc = {"mot": mot.as_dict()}
    if traj is not None:
        doc["trajectory"] = {
            "w_error_mm": traj.w_error_mm,
            "wa_error_mm": traj.wa_error_mm,
            "rte_pct": traj.rte_pct,
            "per_person": {str(k): v for k, v in traj.per_person.items()},
        }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _do_simulate(cfg: RunConfig, out: Path, timer: _Stage):
    out.mkdir(parents=True, exist_ok=True)
    with timer("simulate"):
        seq, gt = simulate(cfg.sim)
    with timer("write"):
        write_psq(out / SEQ_FILE, seq)
        write_mot_csv(out / GT_FILE, gt_rows(gt))
        write_annotations(out / ANN_FILE, gt.annotations)
        write_trajectories(out / TRAJ_FILE, gt.trajectories)
    return seq, gt


# ---------------------------------------------------------------- commands

def cmd_simulate(args) -> int:
    cfg = _load_config(args)
    out = Path(args.out_dir)
    timer = _Stage()
    _do_simulate(cfg, out, timer)
    outputs = {n: out / n for n in (SEQ_FILE, GT_FILE, ANN_FILE, TRAJ_FILE)}
    _write_manifest(out / MANIFEST, "simulate", cfg, {"config": args.config}, outputs, timer)
    return EXIT_OK


def cmd_labels(args) -> int:
    timer = _Stage()
    with timer("read"):
        seq = read_psq(args.psq)
        roots = read_trajectories(args.traj) if args.traj else None
        anns = read_annotations(args.annotations, roots)
    with timer("labels"):
        rows = generate_labels(seq, anns, args.tau, args.connectivity)
    out = Path(args.out)
    with timer("write"):
        write_mot_csv(out, rows)
    _write_manifest(_manifest_path(out, args.manifest), "labels", None,
                    {"psq": args.psq, "annotations": args.annotations}, {"labels": out}, timer,
                    {"tau": args.tau, "connectivity": args.connectivity})
    return EXIT_OK


def cmd_corrupt(args) -> int:
    cfg = _load_config(args)
    timer = _Stage()
    with timer("read"):
        gt = read_mot_csv(args.gt)
    n_frames = args.n_frames
    if n_frames is None:
        n_frames = max((r.frame for r in gt), default=0)
    with timer("corrupt"):
        dets = corrupt_detections(gt, cfg.noise, cfg.sim.seed, n_frames, (cfg.sim.height, cfg.sim.width))
    out = Path(args.out)
    with timer("write"):
        write_mot_csv(out, _det_rows(dets))
    _write_manifest(_manifest_path(out, args.manifest), "corrupt", cfg, {"gt": args.gt}, {"dets": out}, timer)
    return EXIT_OK


def cmd_track(args) -> int:
    cfg = _load_config(args)
    timer = _Stage()
    with timer("read"):
        stream = _det_stream(read_mot_csv(args.dets), args.n_frames)
    with timer("track"):
        tracks = run(stream, cfg.tracker)
    out = Path(args.out)
    outputs = {"tracks": out}
    with timer("write"):
        write_mot_csv(out, _track_rows(tracks))
    extra = {}
    if args.crops_dir:
        if not args.psq:
            raise ConfigSchemaError("--crops-dir", "needs --psq")
        with timer("crops"), warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            crops = extract_crops(read_psq(args.psq), tracks)
            write_crop_archive(args.crops_dir, crops)
        for w in caught:
            log.warning("%s", w.message)
        extra["crop_overflow_warnings"] = len(caught)
        outputs["crops"] = args.crops_dir
    _write_manifest(_manifest_path(out, args.manifest), "track", cfg, {"dets": args.dets}, outputs, timer, extra)
    return EXIT_OK


def _evaluate(cfg: RunConfig, gt, hyp, gt_traj=None, est_traj=None):
    m = cfg.metrics
    mot = clearmot(gt, hyp, m.iou_threshold, m.motp_mode)
    traj = None
    if gt_traj is not None and est_traj is not None:
        traj = evaluate_trajectories(gt_traj, est_traj, m.seg_len, m.keep_partial)
    return mot, traj


def cmd_eval(args) -> int:
    cfg = _load_config(args)
    if (args.gt_traj is None) != (args.est_traj is None):
        raise ConfigSchemaError("--gt-traj/--est-traj", "give both or neither")
    gt = read_mot_csv(args.gt)
    hyp = read_mot_csv(args.hyp)
    gt_traj = read_trajectories(args.gt_traj) if args.gt_traj else None
    est_traj = read_trajectories(args.est_traj) if args.est_traj else None
    mot, traj = _evaluate(cfg, gt, hyp, gt_traj, est_traj)
    text, js = _report_text(mot, traj), _report_json(mot, traj)
    sys.stdout.write(text)
    if args.json:
        Path(args.json).write_text(js, encoding="utf-8")
    else:
        sys.stdout.write(js)
    return EXIT_OK


def cmd_render(args) -> int:
    timer = _Stage()
    with timer("read"):
        seq = read_psq(args.psq)
        tracks = read_mot_csv(args.tracks) if args.tracks else []
    with timer("render"):
        paths = render_sequence(seq, tracks, args.out_dir, args.scale)
    log.info("wrote %d images", len(paths))
    _write_manifest(Path(args.out_dir) / MANIFEST, "render", None, {"psq": args.psq, "tracks": args.tracks},
                    {"images": args.out_dir}, timer)
    return EXIT_OK


def bench(cfg: RunConfig, repeat: int = 5, frames: int = BENCH_FRAMES) -> dict:
    """Time the tracker on a generated detection stream (no I/O in the loop)."""
    sim = replace(cfg.sim, duration=frames / cfg.sim.fps)
    _, gt = simulate(sim)
    stream = corrupt_detections(gt_rows(gt), cfg.noise, sim.seed, sim.n_frames, (sim.height, sim.width))
    run(stream, cfg.tracker)  # warm-up
    secs = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        run(stream, cfg.tracker)
        secs.append(time.perf_counter() - t0)
    med = statistics.median(secs)
    return {
        "backend": BACKEND,
        "strategy": cfg.tracker.strategy,
        "frames": sim.n_frames,
        "detections": sum(len(v) for v in stream.values()),
        "repeat": repeat,
        "seconds": secs,
        "median_s": med,
        "frames_per_s": sim.n_frames / med if med > 0 else float("inf"),
        "spread": (max(secs) - min(secs)) / med if med > 0 else 0.0,
    }


def cmd_bench(args) -> int:
    cfg = _load_config(args)
    if args.repeat < 1:
        raise ConfigSchemaError("--repeat", "must be at least 1")
    rep = bench(cfg, args.repeat, args.frames)
    sys.stdout.write(
        f"backend={rep['backend']} strategy={rep['strategy']} frames={rep['frames']} "
        f"median_ms={1000 * rep['median_s']:.2f} frames_per_s={rep['frames_per_s']:.1f} "
        f"spread={100 * rep['spread']:.1f}%\n"
    )
    if args.json:
        Path(args.json).write_text(json.dumps(rep, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_pipeline(args) -> int:
    cfg = _load_config(args)
    out = Path(args.out_dir)
    timer = _Stage()
    seq, gt = _do_simulate(cfg, out, timer)
    gt_labels = gt_rows(gt)
    with timer("corrupt"):
        dets = corrupt_detections(gt_labels, cfg.noise, cfg.sim.seed, len(seq), (seq.height, seq.width))
        write_mot_csv(out / DETS_FILE, _det_rows(dets))
    with timer("track"):
        tracks = run(dets, cfg.tracker)
        write_mot_csv(out / TRACKS_FILE, _track_rows(tracks))
    with timer("eval"):
        if gt_labels:
            mot, _ = _evaluate(cfg, gt_labels, tracks)
            (out / REPORT_TXT).write_text(_report_text(mot), encoding="utf-8")
            (out / REPORT_JSON).write_text(_report_json(mot), encoding="utf-8")
            sys.stdout.write(_report_text(mot))
        else:
            log.warning("no ground-truth boxes; skipping evaluation")
    names = (SEQ_FILE, GT_FILE, ANN_FILE, TRAJ_FILE, DETS_FILE, TRACKS_FILE, REPORT_TXT, REPORT_JSON)
    _write_manifest(out / MANIFEST, "pipeline", cfg, {"config": args.config},
                    {n: out / n for n in names if (out / n).exists()}, timer)
    return EXIT_OK


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="presstrack", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"presstrack {__version__} ({BACKEND})")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", help="synthesize a pressure sequence with ground truth")
    s.add_argument("--config")
    s.add_argument("--seed", type=int)
    s.add_argument("--out-dir", required=True)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("labels", help="generate footprint labels from pressure and foot joints")
    s.add_argument("--psq", required=True)
    s.add_argument("--annotations", required=True)
    s.add_argument("--traj", help="trajectory CSV supplying root positions")
    s.add_argument("--tau", type=float, default=DEFAULT_TAU)
    s.add_argument("--connectivity", type=int, choices=(4, 8), default=8)
    s.add_argument("--out", required=True)
    s.add_argument("--manifest")
    s.set_defaults(func=cmd_labels)

    s = sub.add_parser("corrupt", help="turn labels into noisy detections")
    s.add_argument("--gt", required=True)
    s.add_argument("--config")
    s.add_argument("--seed", type=int)
    s.add_argument("--n-frames", type=int)
    s.add_argument("--out", required=True)
    s.add_argument("--manifest")
    s.set_defaults(func=cmd_corrupt)

    s = sub.add_parser("track", help="associate detections into tracks")
    s.add_argument("--dets", required=True)
    s.add_argument("--config")
    s.add_argument("--strategy", choices=STRATEGIES)
    s.add_argument("--n-frames", type=int, help="track through trailing empty frames")
    s.add_argument("--out", required=True)
    s.add_argument("--psq", help="pressure sequence for crop extraction")
    s.add_argument("--crops-dir")
    s.add_argument("--manifest")
    s.set_defaults(func=cmd_track)

    s = sub.add_parser("eval", help="CLEAR MOT, identity and trajectory metrics")
    s.add_argument("--gt", required=True)
    s.add_argument("--hyp", required=True)
    s.add_argument("--gt-traj")
    s.add_argument("--est-traj")
    s.add_argument("--config")
    s.add_argument("--json", help="write the JSON report here instead of stdout")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("render", help="write one PNG per frame with track boxes")
    s.add_argument("--psq", required=True)
    s.add_argument("--tracks")
    s.add_argument("--out-dir", required=True)
    s.add_argument("--scale", type=int, default=3)
    s.set_defaults(func=cmd_render)

    s = sub.add_parser("bench", help="tracker throughput on a generated stream")
    s.add_argument("--config")
    s.add_argument("--strategy", choices=STRATEGIES)
    s.add_argument("--repeat", type=int, default=5)
    s.add_argument("--frames", type=int, default=BENCH_FRAMES)
    s.add_argument("--json")
    s.set_defaults(func=cmd_bench)

    s = sub.add_parser("pipeline", help="simulate, corrupt, track and evaluate in one go")
    s.add_argument("--config")
    s.add_argument("--seed", type=int)
    s.add_argument("--strategy", choices=STRATEGIES)
    s.add_argument("--out-dir", required=True)
    s.set_defaults(func=cmd_pipeline)
    return p


def main(argv=None) -> int:
    level = getattr(logging, os.environ.get("PRESSTRACK_LOG", "WARNING").upper(), logging.WARNING)
    logging.basicConfig(format="%(levelname)s %(name)s: %(message)s")
    log.setLevel(level)
    try:
        args = build_parser().parse_args(argv)
    except _UsageError as e:
        sys.stderr.write(f"{e}\n")
        return EXIT_USAGE
    try:
        return args.func(args)
    except (ConfigSchemaError, ConfigError) as e:
        log.error("config error: %s", e)
        return EXIT_CONFIG
    except FormatError as e:
        log.error("parse error: %s", e)
        return EXIT_PARSE
    except (OSError, ValueError, RuntimeError) as e:
        log.error("%s", e)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
