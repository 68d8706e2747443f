"""Command-line entry points.

`gavo run` estimates a trajectory for a window of a TUM-layout sequence
and writes four artifacts into the output directory: the trajectory in
TUM format, per-interval drift CSVs, the per-generation search trace,
and a summary JSON.  `gavo evaluate` scores an externally produced
TUM-format trajectory against a ground-truth file.

Every option can also come from a flat "key = value" config file
(comments start with '#'); explicit command-line flags win over the
file, which wins over built-in defaults.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import evaluation, se3
from .dataset import (
    DEFAULT_DEPTH_SCALE,
    DEFAULT_MAX_DT,
    CameraIntrinsics,
    INTRINSICS_PRESETS,
    load_groundtruth,
    load_rgbd_frame,
    load_sequence,
    preset_intrinsics,
)
from .errors import GavoError, InsufficientLength, MalformedTrajectory
from .ga import GaConfig, estimate_motion
from .warp import build_pyramid


def _parse_bounds(text: str) -> np.ndarray:
    parts = [p for p in str(text).replace(",", " ").split() if p]
    vals = [float(p) for p in parts]
    if len(vals) == 1:
        return np.full(6, vals[0])
    if len(vals) == 6:
        return np.array(vals)
    raise ValueError(f"bounds need 1 or 6 values, got {len(vals)}")


def _parse_bool(text) -> bool:
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {text!r}")


# key -> converter for config files; identical keys exist as CLI flags.
_CONFIG_PARSERS = {
    "dataset": str,
    "start": int,
    "frames": int,
    "preset": str,
    "calib": str,
    "fx": float,
    "fy": float,
    "cx": float,
    "cy": float,
    "depth_scale": float,
    "max_dt": float,
    "delta": int,
    "seed": int,
    "out": str,
    "population_size": int,
    "max_iterations": int,
    "lower_bounds": _parse_bounds,
    "upper_bounds": _parse_bounds,
    "mutation_fraction": float,
    "mutation_rate": float,
    "crossover_fraction": float,
    "stagnation_window": int,
    "stagnation_epsilon": float,
    "pyramid_levels": int,
    "mutate_after_replacement": _parse_bool,
}


def read_config_file(path) -> dict:
    """Parse a flat "key = value" file; unknown keys are an error."""
    out = {}
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _CONFIG_PARSERS:
            raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            out[key] = _CONFIG_PARSERS[key](value)
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
    return out


@dataclass
class RunConfig:
    """Fully resolved settings for one odometry run."""

    dataset_dir: str
    out_dir: str
    start: int = 0
    frames: int = 2
    preset: str = "auto"
    calib: str | None = None
    fx: float | None = None
    fy: float | None = None
    cx: float | None = None
    cy: float | None = None
    depth_scale: float = DEFAULT_DEPTH_SCALE
    max_dt: float = DEFAULT_MAX_DT
    delta: int = evaluation.DEFAULT_DELTA
    seed: int = 0
    ga: GaConfig = field(default_factory=GaConfig)

    def validate(self):
        if self.frames < 2:
            raise ValueError("frames must be >= 2")
        if self.start < 0:
            raise ValueError("start must be >= 0")
        if self.depth_scale <= 0:
            raise ValueError("depth_scale must be positive")
        if self.max_dt <= 0:
            raise ValueError("max_dt must be positive")
        if self.delta < 1:
            raise ValueError("delta must be >= 1")
        self.ga.validate()

    def as_dict(self) -> dict:
        d = {
            "dataset": self.dataset_dir,
            "out": self.out_dir,
            "start": self.start,
            "frames": self.frames,
            "preset": self.preset,
            "calib": self.calib,
            "fx": self.fx,
            "fy": self.fy,
            "cx": self.cx,
            "cy": self.cy,
            "depth_scale": self.depth_scale,
            "max_dt": self.max_dt,
            "delta": self.delta,
            "seed": self.seed,
        }
        for key in (
            "population_size",
            "max_iterations",
            "mutation_fraction",
            "mutation_rate",
            "crossover_fraction",
            "stagnation_window",
            "stagnation_epsilon",
            "pyramid_levels",
            "mutate_after_replacement",
        ):
            d[key] = getattr(self.ga, key)
        d["lower_bounds"] = list(self.ga.lower_bounds)
        d["upper_bounds"] = list(self.ga.upper_bounds)
        return d


def resolve_intrinsics(cfg: RunConfig) -> CameraIntrinsics:
    """Explicit fx/fy/cx/cy win, then a calib file, then the preset.

    preset "auto" sniffs the family from the dataset directory name.
    """
    explicit = [cfg.fx, cfg.fy, cfg.cx, cfg.cy]
    if any(v is not None for v in explicit):
        if any(v is None for v in explicit):
            raise ValueError("fx, fy, cx, cy must be given together")
        return CameraIntrinsics(cfg.fx, cfg.fy, cfg.cx, cfg.cy)
    if cfg.calib:
        vals = []
        for raw in Path(cfg.calib).read_text().splitlines():
            line = raw.split("#", 1)[0].strip()
            if line:
                vals.extend(float(p) for p in line.split())
        if len(vals) != 4:
            raise ValueError(f"{cfg.calib}: expected 4 numbers (fx fy cx cy), got {len(vals)}")
        return CameraIntrinsics(*vals)
    name = cfg.preset
    if name == "auto":
        lowered = Path(cfg.dataset_dir).name.lower()
        for candidate, tag in (("fr1", "freiburg1"), ("fr2", "freiburg2")):
            if tag in lowered or candidate in lowered:
                name = candidate
                break
        else:
            raise ValueError(
                "cannot infer a calibration preset from the dataset name; "
                "pass --preset, --calib, or explicit fx/fy/cx/cy"
            )
    return preset_intrinsics(name)


def _write_drift_csv(path, series):
    lines = ["timestamp,drift_m"]
    for ts, drift in series:
        lines.append(f"{ts:.6f},{drift:.9f}")
    Path(path).write_text("\n".join(lines) + "\n")


def run_odometry(cfg: RunConfig) -> int:
    """Estimate, write artifacts, and evaluate one sequence window."""
    t_start = time.perf_counter()
    cfg.validate()
    intrinsics = resolve_intrinsics(cfg)
    records = load_sequence(cfg.dataset_dir, cfg.max_dt)
    window = records[cfg.start : cfg.start + cfg.frames]
    if len(window) < 2:
        raise ValueError(
            f"window [{cfg.start}, {cfg.start + cfg.frames}) holds {len(window)} "
            f"frames of {len(records)} associated; need at least 2"
        )
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    seeds = np.random.SeedSequence(cfg.seed).spawn(len(window) - 1)
    motions = []
    trace_rows = ["frame,level,iteration,best_error"]
    prev_pyramid = None
    for k in range(len(window) - 1):
        if prev_pyramid is None:
            ref_frame = load_rgbd_frame(window[k], intrinsics, cfg.depth_scale)
            prev_pyramid = build_pyramid(ref_frame, cfg.ga.pyramid_levels)
        tgt_frame = load_rgbd_frame(window[k + 1], intrinsics, cfg.depth_scale)
        tgt_pyramid = build_pyramid(tgt_frame, cfg.ga.pyramid_levels)
        report = estimate_motion(
            prev_pyramid,
            tgt_pyramid,
            cfg.ga,
            rng=np.random.default_rng(seeds[k]),
        )
        motions.append((window[k + 1].timestamp, report.best_xi))
        for lvl, trace in zip(report.levels, report.error_trace):
            for it, err in enumerate(trace):
                trace_rows.append(f"{k},{lvl},{it},{err:.10e}")
        print(
            f"frame {k + 1}/{len(window) - 1}: error {report.best_error:.3e}, "
            f"iterations {report.iterations_used}",
            file=sys.stderr,
        )
        prev_pyramid = tgt_pyramid

    traj = evaluation.accumulate(motions, start_timestamp=window[0].timestamp)
    evaluation.save_trajectory(out_dir / "trajectory.txt", traj)
    (out_dir / "ga_trace.csv").write_text("\n".join(trace_rows) + "\n")

    groundtruth = load_groundtruth(Path(cfg.dataset_dir) / "groundtruth.txt")
    est_m, gt_m = evaluation.match_to_groundtruth(traj, groundtruth, cfg.max_dt)
    rmse_trans = rmse_rot = None
    try:
        errors = evaluation.relative_pose_error(est_m, gt_m, cfg.delta)
        rmse_trans = evaluation.rmse_translational(errors)
        rmse_rot = evaluation.rmse_rotational(errors)
        _write_drift_csv(
            out_dir / "drift.csv",
            evaluation.per_frame_drift_series(est_m, gt_m, cfg.delta),
        )
    except InsufficientLength:
        print(
            f"warning: {len(est_m)} matched poses cannot support delta={cfg.delta}; "
            "summary RMSE is null",
            file=sys.stderr,
        )
    if len(est_m) > 1:
        _write_drift_csv(
            out_dir / "drift_delta1.csv",
            evaluation.per_frame_drift_series(est_m, gt_m, 1),
        )

    summary = {
        "rmse_trans_m": rmse_trans,
        "rmse_rot_rad": rmse_rot,
        "frames": len(window),
        "delta": cfg.delta,
        "seed": cfg.seed,
        "wall_seconds": time.perf_counter() - t_start,
        "config": cfg.as_dict(),
    }
    (out_dir / "summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n"
    )
    if rmse_trans is not None:
        print(f"translational RMSE over delta={cfg.delta}: {rmse_trans:.5f} m", file=sys.stderr)
    return 0


def evaluate_only(
    est_path,
    gt_path,
    delta: int = evaluation.DEFAULT_DELTA,
    max_dt: float = DEFAULT_MAX_DT,
    out_dir=None,
) -> dict:
    """Score an external TUM-format trajectory against a ground-truth file."""
    est = evaluation.load_trajectory(est_path)
    try:
        groundtruth = load_groundtruth(gt_path)
    except FileNotFoundError:
        raise
    except GavoError as exc:
        raise MalformedTrajectory(str(exc)) from exc
    est_m, gt_m = evaluation.match_to_groundtruth(est, groundtruth, max_dt)
    errors = evaluation.relative_pose_error(est_m, gt_m, delta)
    summary = {
        "rmse_trans_m": evaluation.rmse_translational(errors),
        "rmse_rot_rad": evaluation.rmse_rotational(errors),
        "frames": len(est_m),
        "delta": delta,
        "est": str(est_path),
        "gt": str(gt_path),
    }
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write_drift_csv(
            out / "drift.csv", evaluation.per_frame_drift_series(est_m, gt_m, delta)
        )
        (out / "summary.json").write_text(
            json.dumps(summary, indent=2, sort_keys=True) + "\n"
        )
    return summary


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gavo",
        description="Dense RGB-D odometry with a genetic-algorithm motion search.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="estimate a trajectory for a sequence window")
    run.add_argument("--config", help="flat key = value config file")
    run.add_argument("--dataset", help="TUM-layout sequence directory")
    run.add_argument("--out", help="output directory")
    run.add_argument("--start", type=int, help="first associated frame index")
    run.add_argument("--frames", type=int, help="number of frames in the window")
    run.add_argument(
        "--preset",
        choices=["auto", *sorted(INTRINSICS_PRESETS)],
        help="calibration preset (auto sniffs the dataset name)",
    )
    run.add_argument("--calib", help="file holding 'fx fy cx cy'")
    run.add_argument("--fx", type=float)
    run.add_argument("--fy", type=float)
    run.add_argument("--cx", type=float)
    run.add_argument("--cy", type=float)
    run.add_argument("--depth-scale", type=float, dest="depth_scale")
    run.add_argument("--max-dt", type=float, dest="max_dt", help="association tolerance, seconds")
    run.add_argument("--delta", type=int, help="index step for relative pose error")
    run.add_argument("--seed", type=int, help="master random seed")
    run.add_argument("--population-size", type=int, dest="population_size")
    run.add_argument("--max-iterations", type=int, dest="max_iterations")
    run.add_argument("--lower-bounds", type=_parse_bounds, dest="lower_bounds")
    run.add_argument("--upper-bounds", type=_parse_bounds, dest="upper_bounds")
    run.add_argument("--mutation-fraction", type=float, dest="mutation_fraction")
    run.add_argument("--mutation-rate", type=float, dest="mutation_rate")
    run.add_argument("--crossover-fraction", type=float, dest="crossover_fraction")
    run.add_argument("--stagnation-window", type=int, dest="stagnation_window")
    run.add_argument("--stagnation-epsilon", type=float, dest="stagnation_epsilon")
    run.add_argument("--pyramid-levels", type=int, dest="pyramid_levels")
    run.add_argument(
        "--mutate-after-replacement",
        action=argparse.BooleanOptionalAction,
        dest="mutate_after_replacement",
    )

    ev = sub.add_parser("evaluate", help="score an existing TUM-format trajectory")
    ev.add_argument("--est", required=True, help="estimated trajectory file")
    ev.add_argument("--gt", required=True, help="ground-truth trajectory file")
    ev.add_argument("--delta", type=int, default=evaluation.DEFAULT_DELTA)
    ev.add_argument("--max-dt", type=float, dest="max_dt", default=DEFAULT_MAX_DT)
    ev.add_argument("--out", help="optional directory for drift.csv + summary.json")
    return parser


def _merge_run_config(args: argparse.Namespace) -> RunConfig:
    merged: dict = {}
    if args.config:
        merged.update(read_config_file(args.config))
    for key in _CONFIG_PARSERS:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    if "dataset" not in merged:
        raise ValueError("--dataset is required (flag or config file)")
    if "out" not in merged:
        raise ValueError("--out is required (flag or config file)")
    ga_kwargs = {}
    for ga_key in (
        "population_size",
        "max_iterations",
        "lower_bounds",
        "upper_bounds",
        "mutation_fraction",
        "mutation_rate",
        "crossover_fraction",
        "stagnation_window",
        "stagnation_epsilon",
        "pyramid_levels",
        "mutate_after_replacement",
    ):
        if ga_key in merged:
            ga_kwargs[ga_key] = merged.pop(ga_key)
    seed = merged.pop("seed", 0)
    ga = GaConfig(rng_seed=seed, **ga_kwargs)
    return RunConfig(
        dataset_dir=merged.pop("dataset"),
        out_dir=merged.pop("out"),
        seed=seed,
        ga=ga,
        **merged,
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return run_odometry(_merge_run_config(args))
        summary = evaluate_only(args.est, args.gt, args.delta, args.max_dt, args.out)
        print(json.dumps(summary, indent=2, sort_keys=True))
        return 0
    except (GavoError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
