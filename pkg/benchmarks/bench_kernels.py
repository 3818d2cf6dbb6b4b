"""Compare the compiled and pure-Python raster kernels.

Usage::

    python3 benchmarks/bench_kernels.py [--repeat 5] [--pipeline] [--json out.json]

Each kernel runs on the same synthetic inputs with both backends; outputs are
checked for equality before timings are reported. ``--pipeline`` also times a
full detect-and-track run on a short scene, once per backend, in a child
process so that backend selection happens at import.
"""
from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np

from tinytrack import _pykernels
from tinytrack.imaging import SSIM_C1, SSIM_C2

try:
    from tinytrack import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def _inputs(seed: int = 0):
    rng = np.random.default_rng(seed)
    diff = np.floor(rng.exponential(4.0, size=(512, 512))).astype(np.uint8)
    mask = (rng.random((512, 512)) < 0.08).astype(np.uint8)
    frame = np.clip(100 + rng.normal(0, 8, size=(512, 512)), 0, 255).astype(np.uint8)
    frame[200:204, 300:308] += 60
    template = frame[198:206, 298:310].copy()
    seeds = []
    for cy, cx in rng.integers(20, 490, size=(200, 2)):
        seeds.append((np.array([cy, cy, cy + 1], dtype=np.intp), np.array([cx, cx + 1, cx], dtype=np.intp),
                      int(cy), int(cx)))
    return diff, mask, frame, template, seeds


def _cases(mod, data):
    diff, mask, frame, template, seeds = data

    def grow_all():
        return [mod.grow_region(frame, r, c, cy, cx, 5, 80.0, 130.0, 8) for r, c, cy, cx in seeds]

    def ssim_many():
        return [mod.ssim_map(frame, template, 190 + k, 206 + k, 290, 306, SSIM_C1, SSIM_C2) for k in range(20)]

    return {
        "binarize_tiles 512x512": lambda: mod.binarize_tiles(diff, 30, 0.05),
        "label 512x512 (8%)": lambda: mod.label(mask, 8),
        "grow_region x200": grow_all,
        "ssim_map 17x17 x20": ssim_many,
    }


def _same(a, b) -> bool:
    if isinstance(a, (tuple, list)):
        return len(a) == len(b) and all(_same(x, y) for x, y in zip(a, b))
    if isinstance(a, np.ndarray):
        return np.array_equal(a, b)
    return a == b


def _best_time(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def bench_kernels(repeat: int) -> list[dict]:
    data = _inputs()
    py_cases = _cases(_pykernels, data)
    c_cases = _cases(_ckernels, data) if _ckernels is not None else {}
    rows = []
    for name, py_fn in py_cases.items():
        row = {"kernel": name, "python_s": _best_time(py_fn, repeat)}
        if name in c_cases:
            if not _same(py_fn(), c_cases[name]()):
                raise SystemExit(f"backends disagree on {name}")
            row["cython_s"] = _best_time(c_cases[name], repeat)
            row["speedup"] = row["python_s"] / row["cython_s"]
        rows.append(row)
    return rows


_PIPELINE_SNIPPET = """
import time
from tinytrack import kernels
from tinytrack.pipeline import run_pipeline
from tinytrack.scenarios import traffic_scenario
from tinytrack.synth import generate
frames, _ = generate(traffic_scenario(num_frames=40))
t = time.perf_counter()
run_pipeline(frames)
print(kernels.BACKEND, time.perf_counter() - t)
"""


def bench_pipeline() -> list[dict]:
    rows = []
    for pure in ("0", "1"):
        env = dict(os.environ, TINYTRACK_PURE_PYTHON=pure)
        out = subprocess.run([sys.executable, "-c", _PIPELINE_SNIPPET], env=env, check=True,
                             capture_output=True, text=True).stdout.split()
        rows.append({"backend": out[0], "pipeline_40_frames_s": float(out[1])})
    return rows


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--pipeline", action="store_true", help="also time a 40-frame 512x512 run per backend")
    ap.add_argument("--json", help="write results to this file")
    args = ap.parse_args(argv)

    if _ckernels is None:
        print("compiled kernels not built; timing the Python backend only")
    rows = bench_kernels(args.repeat)
    print(f"{'kernel':<26}{'python (ms)':>14}{'cython (ms)':>14}{'speedup':>10}")
    for r in rows:
        c = f"{1e3 * r['cython_s']:14.2f}{r['speedup']:9.1f}x" if "cython_s" in r else f"{'-':>14}{'-':>10}"
        print(f"{r['kernel']:<26}{1e3 * r['python_s']:14.2f}{c}")
    result = {"kernels": rows}
    if args.pipeline:
        result["pipeline"] = bench_pipeline()
        for r in result["pipeline"]:
            print(f"pipeline, {r['backend']:<7} backend: {r['pipeline_40_frames_s']:.2f} s")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(result, fh, indent=2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
