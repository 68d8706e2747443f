#!/usr/bin/env python3
"""Reproduce the benchmark drift numbers on the two TUM sequences.

Runs the odometry CLI with default settings for three seeds per
sequence (as parallel processes), then reports the per-seed and median
translational RMSE drift at a 30-frame step.  Point --root (or
$GAVO_TUM_ROOT) at a directory holding the extracted sequences; see
scripts/download_tum.py.
"""

import argparse
import json
import os
import statistics
import subprocess
import sys
import time
from pathlib import Path

BENCHMARKS = [
    ("freiburg1_xyz", 90, 0.08),
    ("freiburg2_desk", 60, 0.04),
]


def run_seed(seq_dir: Path, frames: int, seed: int, out: Path):
    log = open(out.with_suffix(".log"), "w")
    proc = subprocess.Popen(
        [
            sys.executable,
            "-m",
            "gavo.cli",
            "run",
            "--dataset",
            str(seq_dir),
            "--out",
            str(out),
            "--frames",
            str(frames),
            "--delta",
            "30",
            "--seed",
            str(seed),
        ],
        stdout=log,
        stderr=log,
    )
    return proc, log


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--root",
        default=os.environ.get("GAVO_TUM_ROOT"),
        help="directory holding rgbd_dataset_* sequences",
    )
    parser.add_argument("--out", default="benchmark_runs")
    parser.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2])
    parser.add_argument("--start", type=int, default=0, help="first frame index")
    args = parser.parse_args(argv)
    if not args.root:
        parser.error("--root or $GAVO_TUM_ROOT is required")
    root = Path(args.root)
    out_root = Path(args.out)
    out_root.mkdir(parents=True, exist_ok=True)

    failures = 0
    for name, frames, target in BENCHMARKS:
        seq = root / f"rgbd_dataset_{name}"
        if not (seq / "rgb.txt").is_file():
            print(f"{name}: missing under {root}, skipping")
            continue
        t0 = time.perf_counter()
        running = []
        for seed in args.seeds:
            out = out_root / f"{name}_seed{seed}"
            proc, log = run_seed(seq, frames, seed, out)
            running.append((seed, out, proc, log))
        drifts = []
        for seed, out, proc, log in running:
            code = proc.wait()
            log.close()
            if code != 0:
                print(f"{name} seed {seed}: FAILED, see {out}.log")
                failures += 1
                continue
            summary = json.loads((out / "summary.json").read_text())
            drifts.append((seed, summary["rmse_trans_m"]))
        if not drifts:
            continue
        median = statistics.median(d for _, d in drifts)
        status = "ok" if median <= target else f"ABOVE target {target}"
        per_seed = ", ".join(f"seed {s}: {d:.4f}" for s, d in drifts)
        print(
            f"{name} ({frames} frames, {time.perf_counter() - t0:.0f} s): "
            f"{per_seed}; median {median:.4f} m/s ({status})"
        )
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
