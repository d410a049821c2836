"""Compiled vs pure-Python kernels: per-kernel timings and a full tracking run.

    python3 benchmarks/bench_backends.py [--repeat 5] [--frames 2660]

The full-run comparison starts one subprocess per backend so that the
backend choice made at import time is honoured.
"""

import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from presstrack import _purepy

try:
    from presstrack import _core
except ImportError:
    _core = None

_FULL_RUN = """
import json, sys
from presstrack.cli import bench
from presstrack.config import read_config
print(json.dumps(bench(read_config(), int(sys.argv[1]), int(sys.argv[2]))))
"""


def _boxes(rng, n):
    xy = rng.uniform(0, 100, (n, 2))
    wh = rng.uniform(5, 40, (n, 2))
    return [tuple(map(float, r)) for r in np.hstack([xy, wh])]


def kernel_cases(seed=0):
    rng = np.random.default_rng(seed)
    tracks = _boxes(rng, 4)
    dets = [b + (float(c),) for b, c in zip(_boxes(rng, 5), rng.uniform(0.3, 1, 5))]
    mats = []
    for _ in range(200):
        n, m = rng.integers(1, 7, 2)
        c = rng.random(n * m)
        c[rng.random(n * m) < 0.3] = np.inf
        mats.append((c.tolist(), int(n), int(m)))
    return {
        "associate 4x5": lambda k: k.associate(tracks, dets, 0.3, True),
        "pairwise 4x5": lambda k: k.pairwise(tracks, dets, True),
        "solve 200 mats n,m<=6": lambda k: [k.solve_flat(c, n, m) for c, n, m in mats],
    }


def time_kernels(repeat):
    rows = []
    backends = [("python", _purepy)] + ([("cython", _core)] if _core is not None else [])
    for name, fn in kernel_cases().items():
        res = {"case": name}
        for bname, mod in backends:
            t = timeit.Timer(lambda: fn(mod))
            loops, _ = t.autorange()
            res[bname] = min(t.repeat(repeat, loops)) / loops
        rows.append(res)
    return rows


def full_run(repeat, frames):
    out = {}
    for bname, env in (("python", {"PRESSTRACK_PURE": "1"}), ("cython", {})):
        proc = subprocess.run(
            [sys.executable, "-c", _FULL_RUN, str(repeat), str(frames)],
            env={**os.environ, **env}, capture_output=True, text=True, check=True,
        )
        rep = json.loads(proc.stdout)
        out[rep["backend"]] = rep
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--frames", type=int, default=2660)
    args = ap.parse_args()

    print(f"{'kernel':<24}{'python':>12}{'cython':>12}{'speedup':>9}")
    for r in time_kernels(args.repeat):
        cy = r.get("cython")
        line = f"{r['case']:<24}{1e6 * r['python']:>10.1f}us"
        line += f"{1e6 * cy:>10.1f}us{r['python'] / cy:>8.1f}x" if cy else f"{'n/a':>12}"
        print(line)

    runs = full_run(args.repeat, args.frames)
    print(f"\nfull tracking run, {args.frames} frames, median of {args.repeat}:")
    for bname, rep in sorted(runs.items()):
        print(f"  {bname:<8}{1000 * rep['median_s']:8.1f} ms  {rep['frames_per_s']:10.0f} frames/s")
    if "python" in runs and "cython" in runs and len(runs) == 2:
        print(f"  speedup {runs['python']['median_s'] / runs['cython']['median_s']:.1f}x")


if __name__ == "__main__":
    main()
