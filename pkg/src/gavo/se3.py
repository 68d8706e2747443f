"""Rigid-body motion primitives.

A motion hypothesis is a 6-vector twist [v1 v2 v3 w1 w2 w3]: linear part
first, angular part second.  The exponential map turns a twist into a
rotation + translation pair; that pair is what gets chained along a
trajectory.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonUnitQuaternion

# Below this rotation magnitude the closed-form coefficients are replaced
# by their second-order Taylor expansions.
SMALL_ANGLE = 1e-8


def skew(w):
    """3x3 antisymmetric matrix such that skew(w) @ x == cross(w, x)."""
    w1, w2, w3 = (float(c) for c in w)
    return np.array([
        [0.0, -w3, w2],
        [w3, 0.0, -w1],
        [-w2, w1, 0.0],
    ])


def hat(xi):
    """Lift a twist to its 4x4 generator matrix.

    Top-left block is skew(w), last column holds v, bottom row is zero.
    """
    xi = np.asarray(xi, dtype=np.float64)
    out = np.zeros((4, 4))
    out[:3, :3] = skew(xi[3:6])
    out[:3, 3] = xi[0:3]
    return out


@dataclass(frozen=True, eq=False)
class RigidTransform:
    """Rotation R (3x3) plus translation T (3,), applied as R @ p + T."""

    R: np.ndarray
    T: np.ndarray

    def as_matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.R
        m[:3, 3] = self.T
        return m


def identity() -> RigidTransform:
    return RigidTransform(np.eye(3), np.zeros(3))


def exp_twist(xi) -> RigidTransform:
    """Exponential map from a twist to a rigid transform.

    Uses the closed-form rotation formula with coefficients written to
    avoid cancellation; below SMALL_ANGLE the coefficients switch to
    their Taylor expansions so nothing divides by ~0.
    """
    xi = np.asarray(xi, dtype=np.float64)
    if xi.shape != (6,):
        raise ValueError(f"twist must have shape (6,), got {xi.shape}")
    if not np.all(np.isfinite(xi)):
        raise ValueError("twist components must be finite")
    v = xi[0:3]
    w = xi[3:6]
    theta2 = float(w @ w)
    theta = np.sqrt(theta2)
    k = skew(w)
    k2 = k @ k
    if theta < SMALL_ANGLE:
        a = 1.0 - theta2 / 6.0
        b = 0.5 - theta2 / 24.0
        c = 1.0 / 6.0 - theta2 / 120.0
    else:
        a = np.sin(theta) / theta
        # 1 - cos rewritten with the half angle: no subtraction of near-equal terms.
        b = 2.0 * np.sin(theta / 2.0) ** 2 / theta2
        c = (1.0 - a) / theta2
    rot = np.eye(3) + a * k + b * k2
    vmat = np.eye(3) + b * k + c * k2
    return RigidTransform(rot, vmat @ v)


def compose(a: RigidTransform, b: RigidTransform) -> RigidTransform:
    """Composite transform applying b first, then a."""
    return RigidTransform(a.R @ b.R, a.R @ b.T + a.T)


def inverse(g: RigidTransform) -> RigidTransform:
    # Multiply with the contiguous copy, not the transpose view: the two
    # can round differently, and downstream error metrics rely on
    # inverse(g) composed with g cancelling bit-exactly.
    rt = g.R.T.copy()
    return RigidTransform(rt, -(rt @ g.T))


def transform_point(g: RigidTransform, p) -> np.ndarray:
    p = np.asarray(p, dtype=np.float64)
    return g.R @ p + g.T


def from_quaternion(q, t) -> RigidTransform:
    """Build a transform from a unit quaternion (qx, qy, qz, qw) and translation.

    The quaternion must be unit to within 1e-6; callers reading noisy files
    should renormalise before calling.
    """
    q = np.asarray(q, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    n = float(np.linalg.norm(q))
    if abs(n - 1.0) > 1e-6:
        raise NonUnitQuaternion(f"|q| = {n:.8f}, expected 1")
    x, y, z, w = q / n
    rot = np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
        [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
        [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
    ])
    return RigidTransform(rot, t.copy())


def to_quaternion(rot: np.ndarray) -> np.ndarray:
    """Rotation matrix to (qx, qy, qz, qw) with qw >= 0.

    Branches on the largest diagonal combination for numerical stability.
    """
    m = rot
    tr = m[0, 0] + m[1, 1] + m[2, 2]
    if tr > 0:
        s = np.sqrt(tr + 1.0) * 2.0
        w = 0.25 * s
        x = (m[2, 1] - m[1, 2]) / s
        y = (m[0, 2] - m[2, 0]) / s
        z = (m[1, 0] - m[0, 1]) / s
    elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
        s = np.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2.0
        w = (m[2, 1] - m[1, 2]) / s
        x = 0.25 * s
        y = (m[0, 1] + m[1, 0]) / s
        z = (m[0, 2] + m[2, 0]) / s
    elif m[1, 1] > m[2, 2]:
        s = np.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2.0
        w = (m[0, 2] - m[2, 0]) / s
        x = (m[0, 1] + m[1, 0]) / s
        y = 0.25 * s
        z = (m[1, 2] + m[2, 1]) / s
    else:
        s = np.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2.0
        w = (m[1, 0] - m[0, 1]) / s
        x = (m[0, 2] + m[2, 0]) / s
        y = (m[1, 2] + m[2, 1]) / s
        z = 0.25 * s
    q = np.array([x, y, z, w])
    q /= np.linalg.norm(q)
    if q[3] < 0:
        q = -q
    return q
