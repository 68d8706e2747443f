"""Synthetic RGB-D scenes with exactly known camera motion.

Renders a textured plane at constant world depth through a pinhole
camera.  The texture is analytic (a sum of sinusoids over plane
coordinates in meters), so frames can be produced for any camera pose
without resampling artifacts, and the relative motion between any two
rendered frames is known in closed form.  Used by the test suite and by
scripts/make_synthetic_sequence.py to build TUM-layout datasets.
"""

from __future__ import annotations

import math
from pathlib import Path

import cv2
import numpy as np

from . import se3
from .dataset import CameraIntrinsics, RgbdFrame, write_index_file

# (fx, fy) cycles/meter, amplitude, phase.  Mixed orientations and scales
# so image gradients constrain all six motion components.
_TEXTURE_WAVES = [
    (0.35, 0.20, 1.2, 0.2),
    (2.2, 0.7, 1.0, 0.9),
    (-1.1, 3.1, 0.8, 2.1),
    (0.5, -1.3, 0.9, 5.5),
    (4.4, -2.6, 0.6, 4.2),
    (-5.3, -4.1, 0.5, 0.4),
    (7.9, 2.3, 0.35, 3.3),
]
_TEXTURE_NORM = sum(a for _, _, a, _ in _TEXTURE_WAVES)


def plane_texture(x, y):
    """Intensity of the plane at world coordinates (x, y), in (0.4, 0.6).

    Moderate contrast on purpose: the sub-pixel interpolation mismatch
    between a rendered frame and a warped one grows with the square of
    the contrast, and keeping it low keeps the error landscape around
    the true motion clean enough to localize precisely.
    """
    acc = np.zeros_like(np.asarray(x, dtype=np.float64))
    for fx, fy, a, phase in _TEXTURE_WAVES:
        acc = acc + a * np.sin(2.0 * math.pi * (fx * x + fy * y) + phase)
    return 0.5 + 0.1 * acc / _TEXTURE_NORM


def default_intrinsics(width: int, height: int) -> CameraIntrinsics:
    """Wide-angle pinhole model (~96 deg horizontal field of view).

    A wide field of view is what lets a planar scene constrain all six
    motion components: the perspective distortion that separates an
    x/y translation from the look-alike rotation grows quadratically
    with distance from the image center.
    """
    return CameraIntrinsics(0.45 * width, 0.45 * width, (width - 1) / 2.0, (height - 1) / 2.0)


def render_plane_frame(
    pose: se3.RigidTransform,
    k: CameraIntrinsics,
    width: int,
    height: int,
    plane_z: float = 2.0,
) -> RgbdFrame:
    """Render the plane seen from a camera at `pose` (camera-to-world).

    Pixels whose ray never reaches the plane get depth 0 and a neutral
    intensity; with the small motions used here that does not happen.
    """
    uu, vv = np.meshgrid(np.arange(width), np.arange(height))
    rays = np.stack([
        (uu.ravel() - k.cx) / k.fx,
        (vv.ravel() - k.cy) / k.fy,
        np.ones(width * height),
    ])
    d_world = pose.R @ rays
    origin = pose.T
    denom = d_world[2]
    hit = np.abs(denom) > 1e-12
    s = np.where(hit, (plane_z - origin[2]) / np.where(hit, denom, 1.0), -1.0)
    good = hit & (s > 0)
    px = origin[0] + s * d_world[0]
    py = origin[1] + s * d_world[1]
    intensity = np.where(good, plane_texture(px, py), 0.5)
    depth = np.where(good, s, 0.0)
    return RgbdFrame(
        intensity.reshape(height, width).astype(np.float32),
        depth.reshape(height, width).astype(np.float32),
        k,
    )


def synthesize_pair(
    xi_true,
    width: int = 320,
    height: int = 240,
    plane_z: float = 1.0,
    k: CameraIntrinsics | None = None,
) -> tuple[RgbdFrame, RgbdFrame]:
    """Frame pair whose exact relative motion (earlier -> later) is xi_true.

    The close plane makes translations produce strong image motion, so
    the pair pins down the full motion rather than just its rotation.
    """
    if k is None:
        k = default_intrinsics(width, height)
    ref = render_plane_frame(se3.identity(), k, width, height, plane_z)
    tgt_pose = se3.inverse(se3.exp_twist(xi_true))
    tgt = render_plane_frame(tgt_pose, k, width, height, plane_z)
    return ref, tgt


def wobble_pose(t: float) -> se3.RigidTransform:
    """Smooth low-amplitude camera-to-world pose at time t seconds."""
    trans = np.array([
        0.05 * math.sin(2.0 * math.pi * 0.50 * t),
        0.04 * math.sin(2.0 * math.pi * 0.37 * t + 1.0),
        0.03 * math.sin(2.0 * math.pi * 0.23 * t + 2.0),
    ])
    w = np.array([
        0.020 * math.sin(2.0 * math.pi * 0.30 * t + 0.5),
        0.020 * math.sin(2.0 * math.pi * 0.21 * t + 1.7),
        0.015 * math.sin(2.0 * math.pi * 0.44 * t + 2.9),
    ])
    rot = se3.exp_twist(np.concatenate([np.zeros(3), w])).R
    return se3.RigidTransform(rot, trans)


def render_wobble_sequence(
    num_frames: int,
    width: int = 160,
    height: int = 120,
    plane_z: float = 2.0,
    fps: float = 30.0,
    t0: float = 100.0,
) -> tuple[list[float], list[se3.RigidTransform], list[RgbdFrame]]:
    """In-memory sequence along the wobble trajectory."""
    k = default_intrinsics(width, height)
    times, poses, frames = [], [], []
    for i in range(num_frames):
        t = t0 + i / fps
        pose = wobble_pose(t - t0)
        times.append(t)
        poses.append(pose)
        frames.append(render_plane_frame(pose, k, width, height, plane_z))
    return times, poses, frames


def write_tum_sequence(
    out_dir,
    num_frames: int,
    width: int = 160,
    height: int = 120,
    plane_z: float = 2.0,
    fps: float = 30.0,
    t0: float = 100.0,
    depth_scale: float = 5000.0,
) -> Path:
    """Write a TUM-layout dataset (rgb/, depth/, index files, groundtruth).

    Depth timestamps trail color by 4 ms and ground truth by 2 ms so the
    association and matching paths get exercised.  calib.txt records the
    synthetic intrinsics as "fx fy cx cy".
    """
    root = Path(out_dir)
    (root / "rgb").mkdir(parents=True, exist_ok=True)
    (root / "depth").mkdir(parents=True, exist_ok=True)
    times, poses, frames = render_wobble_sequence(
        num_frames, width, height, plane_z, fps, t0
    )
    k = frames[0].intrinsics
    rgb_records, depth_records = [], []
    gt_lines = ["# ground truth trajectory", "# timestamp tx ty tz qx qy qz qw"]
    for t, pose, frame in zip(times, poses, frames):
        td = t + 0.004
        tg = t + 0.002
        rgb_name = f"rgb/{t:.6f}.png"
        depth_name = f"depth/{td:.6f}.png"
        gray = np.clip(np.rint(frame.intensity * 255.0), 0, 255).astype(np.uint8)
        cv2.imwrite(str(root / rgb_name), np.dstack([gray, gray, gray]))
        raw = np.clip(np.rint(frame.depth * depth_scale), 0, 65535).astype(np.uint16)
        cv2.imwrite(str(root / depth_name), raw)
        rgb_records.append((t, rgb_name))
        depth_records.append((td, depth_name))
        q = se3.to_quaternion(pose.R)
        tx, ty, tz = pose.T
        gt_lines.append(
            f"{tg:.6f} {tx:.6f} {ty:.6f} {tz:.6f} "
            f"{q[0]:.6f} {q[1]:.6f} {q[2]:.6f} {q[3]:.6f}"
        )
    write_index_file(root / "rgb.txt", rgb_records, ("color images", "timestamp filename"))
    write_index_file(root / "depth.txt", depth_records, ("depth images", "timestamp filename"))
    (root / "groundtruth.txt").write_text("\n".join(gt_lines) + "\n")
    (root / "calib.txt").write_text(f"{k.fx} {k.fy} {k.cx} {k.cy}\n")
    return root
