"""Dense photometric alignment machinery.

The score of a motion hypothesis between two frames is the mean squared
intensity difference over the earlier frame's pixel grid: every pixel
with a depth measurement is lifted to 3-D, moved by the hypothesised
motion, projected into the later frame, and compared against a bilinear
sample there.  Pixels that lose their depth, land behind the camera, or
fall outside the later image are dropped and the mean is taken over the
survivors.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass

import numpy as np
from numba import njit

from .dataset import CameraIntrinsics, RgbdFrame
from .errors import (
    BehindCamera,
    DegenerateOverlap,
    DimensionMismatch,
    InvalidDepth,
    TooManyLevels,
)
from .se3 import exp_twist

# A motion hypothesis is unusable when fewer than this fraction of the
# image's pixels survive warping.
MIN_VALID_FRACTION = 0.01


@dataclass(eq=False)
class FramePyramid:
    """Coarse-to-fine stack; levels[0] is full resolution, each next level
    halves both dimensions (floor) and carries matching intrinsics."""

    levels: list[RgbdFrame]

    def __len__(self):
        return len(self.levels)


@dataclass(frozen=True)
class ResidualStats:
    mean_squared_error: float
    valid_count: int


def build_pyramid(frame: RgbdFrame, num_levels: int) -> FramePyramid:
    """Downsample a frame num_levels - 1 times by factor 2.

    Intensity blocks average all four pixels; depth blocks average only
    the valid (nonzero) ones so holes do not drag depth toward zero.
    Principal point follows the half-pixel convention c -> (c + 0.5)/2 - 0.5.
    """
    if num_levels < 1:
        raise ValueError("num_levels must be >= 1")
    levels = [frame]
    cur = frame
    for li in range(1, num_levels):
        h2 = cur.height // 2
        w2 = cur.width // 2
        if h2 < 1 or w2 < 1:
            raise TooManyLevels(
                f"level {li} would be {w2}x{h2} from {cur.width}x{cur.height}"
            )
        ib = cur.intensity[: 2 * h2, : 2 * w2].reshape(h2, 2, w2, 2)
        intensity = ib.mean(axis=(1, 3), dtype=np.float32)
        db = cur.depth[: 2 * h2, : 2 * w2].reshape(h2, 2, w2, 2)
        dsum = db.sum(axis=(1, 3), dtype=np.float64)
        dcount = (db > 0).sum(axis=(1, 3))
        depth = np.where(dcount > 0, dsum / np.maximum(dcount, 1), 0.0).astype(np.float32)
        k = cur.intrinsics
        kd = CameraIntrinsics(
            k.fx / 2.0,
            k.fy / 2.0,
            (k.cx + 0.5) / 2.0 - 0.5,
            (k.cy + 0.5) / 2.0 - 0.5,
        )
        cur = RgbdFrame(intensity, depth, kd)
        levels.append(cur)
    return FramePyramid(levels)


def back_project(u: float, v: float, d: float, k: CameraIntrinsics) -> np.ndarray:
    """Pixel (u, v) with depth d -> camera-frame point (X, Y, Z)."""
    if d <= 0:
        raise InvalidDepth(f"depth must be positive, got {d}")
    x = (u - k.cx) / k.fx * d
    y = (v - k.cy) / k.fy * d
    return np.array([x, y, d], dtype=np.float64)


def project(p, k: CameraIntrinsics) -> tuple[float, float]:
    """Camera-frame point -> pixel coordinates (u, v)."""
    x, y, z = (float(c) for c in p)
    if z <= 0:
        raise BehindCamera(f"point has Z = {z}")
    return (x / z * k.fx + k.cx, y / z * k.fy + k.cy)


def sample_bilinear(image: np.ndarray, u: float, v: float):
    """Bilinear sample at continuous (u, v); returns None when the 2x2
    neighborhood is not fully inside the image.

    Coordinates on the last row/column (u == W-1 or v == H-1) are still
    inside: the base pixel shifts so the weights just saturate.
    """
    h, w = image.shape
    if w < 2 or h < 2:
        return None
    if not (0.0 <= u <= w - 1 and 0.0 <= v <= h - 1):
        return None
    u0 = min(int(np.floor(u)), w - 2)
    v0 = min(int(np.floor(v)), h - 2)
    fu = u - u0
    fv = v - v0
    tl = float(image[v0, u0])
    tr = float(image[v0, u0 + 1])
    bl = float(image[v0 + 1, u0])
    br = float(image[v0 + 1, u0 + 1])
    top = tl + fu * (tr - tl)
    bot = bl + fu * (br - bl)
    return top + fv * (bot - top)


class _RefCache:
    """Per-frame precomputation for the earlier frame of a pair: flat
    indices of valid-depth pixels, their intensities, and their 3-D points."""

    def __init__(self, frame: RgbdFrame):
        k = frame.intrinsics
        vv, uu = np.nonzero(frame.depth > 0)
        d = frame.depth[vv, uu].astype(np.float64)
        x = (uu - k.cx) / k.fx * d
        y = (vv - k.cy) / k.fy * d
        self.points = np.ascontiguousarray(np.stack([x, y, d]), dtype=np.float32)
        self.vals = np.ascontiguousarray(frame.intensity[vv, uu])
        self.lin = np.ascontiguousarray(vv * frame.width + uu, dtype=np.int64)
        self.count = int(self.lin.size)


_ref_caches: "weakref.WeakKeyDictionary[RgbdFrame, _RefCache]" = weakref.WeakKeyDictionary()


def _ref_cache(frame: RgbdFrame) -> _RefCache:
    cache = _ref_caches.get(frame)
    if cache is None:
        cache = _RefCache(frame)
        _ref_caches[frame] = cache
    return cache


@njit(cache=True)
def _warp_residual_sum(points, vals, tgt, rot, t, fx, fy, cx, cy, w, h):
    """Accumulate squared residuals of warped points in one pass.

    Mirrors the scalar pipeline: transform, require Z > 0, project,
    require the full bilinear neighborhood inside the image (the last
    row/column counts as inside with saturated weights), sample, square.
    Sequential accumulation keeps results reproducible bit for bit.
    """
    acc = 0.0
    count = 0
    for i in range(points.shape[1]):
        px = points[0, i]
        py = points[1, i]
        pz = points[2, i]
        x = rot[0, 0] * px + rot[0, 1] * py + rot[0, 2] * pz + t[0]
        y = rot[1, 0] * px + rot[1, 1] * py + rot[1, 2] * pz + t[1]
        z = rot[2, 0] * px + rot[2, 1] * py + rot[2, 2] * pz + t[2]
        if z <= 0.0:
            continue
        u = x / z * fx + cx
        v = y / z * fy + cy
        if u < 0.0 or u > w - 1 or v < 0.0 or v > h - 1:
            continue
        u0 = int(u)
        v0 = int(v)
        if u0 > w - 2:
            u0 = w - 2
        if v0 > h - 2:
            v0 = h - 2
        fu = u - u0
        fv = v - v0
        base = v0 * w + u0
        tl = tgt[base]
        tr = tgt[base + 1]
        bl = tgt[base + w]
        br = tgt[base + w + 1]
        top = tl + fu * (tr - tl)
        bot = bl + fu * (br - bl)
        r = (top + fv * (bot - top)) - vals[i]
        acc += r * r
        count += 1
    return acc, count


def photometric_error(xi, ref: RgbdFrame, tgt: RgbdFrame) -> ResidualStats:
    """Mean squared intensity residual of warping ref onto tgt by exp(xi).

    Iterates the valid-depth pixels of ref; raises DegenerateOverlap when
    fewer than MIN_VALID_FRACTION of the image's pixels survive.  The
    exact zero twist skips the warp arithmetic entirely so a frame scored
    against itself comes out at exactly 0.
    """
    if ref.intensity.shape != tgt.intensity.shape:
        raise DimensionMismatch(
            f"ref {ref.intensity.shape} vs tgt {tgt.intensity.shape}"
        )
    if ref.intrinsics != tgt.intrinsics:
        raise DimensionMismatch("ref and tgt intrinsics differ")
    xi = np.asarray(xi, dtype=np.float64)
    h, w = ref.intensity.shape
    if w < 2 or h < 2:
        raise DegenerateOverlap(f"image {w}x{h} too small to sample")
    cache = _ref_cache(ref)
    tgt_flat = tgt.intensity.ravel()

    if not xi.any():
        count = cache.count
        if count < MIN_VALID_FRACTION * w * h:
            raise DegenerateOverlap(f"{count} valid pixels of {w * h}")
        r = tgt_flat[cache.lin] - cache.vals
        mse = float(np.sum(np.square(r), dtype=np.float64) / count)
        return ResidualStats(mse, count)

    g = exp_twist(xi)
    k = ref.intrinsics
    acc, count = _warp_residual_sum(
        cache.points,
        cache.vals,
        tgt_flat,
        np.ascontiguousarray(g.R, dtype=np.float32),
        g.T.astype(np.float32),
        np.float32(k.fx),
        np.float32(k.fy),
        np.float32(k.cx),
        np.float32(k.cy),
        w,
        h,
    )
    if count < MIN_VALID_FRACTION * w * h:
        raise DegenerateOverlap(f"{count} valid pixels of {w * h}")
    return ResidualStats(float(acc) / count, count)
