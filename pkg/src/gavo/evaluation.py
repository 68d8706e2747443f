"""Trajectory assembly and drift metrics.

Relative motions are chained into a trajectory, matched against ground
truth by timestamp, and scored with relative pose error over a fixed
index step: E_i = (Q_i^-1 Q_{i+d})^-1 (P_i^-1 P_{i+d}) where Q is
ground truth and P the estimate.  The headline number is the RMS of
the translational parts of the E_i, which for step d equal to the frame
rate reads as drift in meters per second.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import se3
from .dataset import GroundTruthPose, load_groundtruth
from .errors import (
    EmptyInput,
    EmptyOverlap,
    GavoError,
    InsufficientLength,
    MalformedTrajectory,
    NonMonotonicTimestamps,
)

DEFAULT_DELTA = 30


@dataclass(eq=False)
class Trajectory:
    """Strictly time-ordered pose list; poses map camera to world."""

    timestamps: np.ndarray
    poses: list[se3.RigidTransform]

    def __len__(self):
        return len(self.poses)


def _check_monotonic(timestamps):
    ts = np.asarray(timestamps, dtype=np.float64)
    if ts.size > 1 and np.any(np.diff(ts) <= 0):
        raise NonMonotonicTimestamps("timestamps must be strictly increasing")
    return ts


def accumulate(relative_motions, start_timestamp: float | None = None) -> Trajectory:
    """Chain (timestamp, twist) steps into absolute poses.

    Each motion's timestamp stamps the pose it arrives at; the identity
    starting pose is stamped with start_timestamp (the first frame's
    time).  An empty motion list yields an empty trajectory.
    """
    motions = list(relative_motions)
    if not motions:
        return Trajectory(np.empty(0), [])
    if start_timestamp is None:
        raise ValueError("start_timestamp is required when motions are non-empty")
    times = [float(start_timestamp)] + [float(t) for t, _ in motions]
    ts = _check_monotonic(times)
    poses = [se3.identity()]
    for _, xi in motions:
        poses.append(se3.compose(poses[-1], se3.exp_twist(xi)))
    return Trajectory(ts, poses)


def match_to_groundtruth(
    est: Trajectory,
    groundtruth: list[GroundTruthPose],
    max_dt: float = 0.02,
) -> tuple[Trajectory, Trajectory]:
    """Pair each estimated pose with its nearest ground-truth pose.

    Estimates without a ground-truth pose within max_dt are dropped, as
    are repeats of an already-claimed ground-truth pose.  Raises
    EmptyOverlap when nothing pairs up.
    """
    if max_dt <= 0:
        raise ValueError("max_dt must be positive")
    if not groundtruth or len(est) == 0:
        raise EmptyOverlap("no poses to match")
    gt_ts = np.array([g.timestamp for g in groundtruth])
    est_kept = []
    gt_kept = []
    last_gt = -1
    for ts, pose in zip(est.timestamps, est.poses):
        j = int(np.searchsorted(gt_ts, ts))
        best = None
        for cand in (j - 1, j):
            if 0 <= cand < len(gt_ts) and abs(gt_ts[cand] - ts) <= max_dt:
                if best is None or abs(gt_ts[cand] - ts) < abs(gt_ts[best] - ts):
                    best = cand
        if best is None or best <= last_gt:
            continue
        last_gt = best
        g = groundtruth[best]
        est_kept.append((ts, pose))
        gt_kept.append((g.timestamp, se3.from_quaternion(g.quaternion, g.translation)))
    if not est_kept:
        raise EmptyOverlap(f"no ground-truth pose within {max_dt} s of any estimate")
    return (
        Trajectory(np.array([t for t, _ in est_kept]), [p for _, p in est_kept]),
        Trajectory(np.array([t for t, _ in gt_kept]), [p for _, p in gt_kept]),
    )


def relative_pose_error(
    est: Trajectory, gt: Trajectory, delta: int = DEFAULT_DELTA
) -> list[se3.RigidTransform]:
    """Per-index relative pose errors over step delta for paired trajectories."""
    if delta < 1:
        raise ValueError("delta must be >= 1")
    n = len(est)
    if n != len(gt):
        raise ValueError(f"trajectories differ in length: {n} vs {len(gt)}")
    if n <= delta:
        raise InsufficientLength(f"need more than delta={delta} poses, have {n}")
    errors = []
    for i in range(n - delta):
        gt_step = se3.compose(se3.inverse(gt.poses[i]), gt.poses[i + delta])
        est_step = se3.compose(se3.inverse(est.poses[i]), est.poses[i + delta])
        errors.append(se3.compose(se3.inverse(gt_step), est_step))
    return errors


def rmse_translational(errors: list[se3.RigidTransform]) -> float:
    """Root mean square of the translation norms of relative pose errors."""
    if not errors:
        raise EmptyInput("no relative pose errors")
    sq = [float(e.T @ e.T) for e in errors]
    return float(np.sqrt(np.mean(sq)))


def rmse_rotational(errors: list[se3.RigidTransform]) -> float:
    """RMS rotation angle (radians) of relative pose errors; auxiliary metric."""
    if not errors:
        raise EmptyInput("no relative pose errors")
    angles = []
    for e in errors:
        c = (np.trace(e.R) - 1.0) / 2.0
        angles.append(float(np.arccos(np.clip(c, -1.0, 1.0))))
    return float(np.sqrt(np.mean(np.square(angles))))


def per_frame_drift_series(
    est: Trajectory, gt: Trajectory, delta: int = DEFAULT_DELTA
) -> list[tuple[float, float]]:
    """(timestamp, translational drift) for each relative pose error; the
    timestamp is the start of the interval."""
    errors = relative_pose_error(est, gt, delta)
    out = []
    for i, e in enumerate(errors):
        out.append((float(est.timestamps[i]), float(np.linalg.norm(e.T))))
    return out


def load_trajectory(path) -> Trajectory:
    """Read a TUM-format trajectory file into a Trajectory."""
    try:
        poses = load_groundtruth(path)
    except FileNotFoundError:
        raise
    except GavoError as exc:
        raise MalformedTrajectory(str(exc)) from exc
    ts = np.array([p.timestamp for p in poses])
    if ts.size > 1 and np.any(np.diff(ts) <= 0):
        raise MalformedTrajectory(f"{path}: duplicate timestamps")
    return Trajectory(
        ts, [se3.from_quaternion(p.quaternion, p.translation) for p in poses]
    )


def save_trajectory(path, traj: Trajectory) -> None:
    """Write TUM-format rows.

    16 decimals make re-loading the file reproduce the poses to within
    a unit in the last place, so metrics recomputed from the file agree
    with in-memory ones to ~1e-15.
    """
    lines = ["# timestamp tx ty tz qx qy qz qw"]
    for ts, pose in zip(traj.timestamps, traj.poses):
        q = se3.to_quaternion(pose.R)
        tx, ty, tz = pose.T
        lines.append(
            f"{ts:.6f} {tx:.16f} {ty:.16f} {tz:.16f} "
            f"{q[0]:.16f} {q[1]:.16f} {q[2]:.16f} {q[3]:.16f}"
        )
    Path(path).write_text("\n".join(lines) + "\n")
