"""Readers for TUM-style RGB-D sequences.

A sequence directory holds rgb.txt / depth.txt index files ("timestamp
filename" per line, '#' starts a comment), the referenced PNG images, and
groundtruth.txt with "timestamp tx ty tz qx qy qz qw" rows.  Color is
8-bit 3-channel, depth is 16-bit single channel where raw / depth_scale
is meters and raw 0 marks a missing measurement.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import cv2
import numpy as np

from .errors import (
    DimensionMismatch,
    MalformedLine,
    MissingFile,
    NonUnitQuaternion,
    UnsupportedPixelFormat,
)

DEFAULT_DEPTH_SCALE = 5000.0
DEFAULT_MAX_DT = 0.02

# Factory calibrations for the two camera families used by the benchmark.
INTRINSICS_PRESETS = {
    "fr1": (517.3, 516.5, 318.6, 255.3),
    "fr2": (520.9, 521.0, 325.1, 249.7),
}


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole parameters in pixels; principal point is in 0-based pixel coords."""

    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        for name in ("fx", "fy", "cx", "cy"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")


def preset_intrinsics(name: str) -> CameraIntrinsics:
    if name not in INTRINSICS_PRESETS:
        raise ValueError(f"unknown intrinsics preset {name!r}, expected one of {sorted(INTRINSICS_PRESETS)}")
    return CameraIntrinsics(*INTRINSICS_PRESETS[name])


@dataclass(frozen=True)
class FrameRecord:
    """One associated color+depth frame; timestamp is the color timestamp."""

    timestamp: float
    rgb_path: str
    depth_path: str


@dataclass(eq=False)
class RgbdFrame:
    """Grayscale intensity in [0, 1] plus metric depth, both float32 (H, W).

    Depth 0 means "no measurement".  width/height are derived from the
    arrays; intrinsics describe this resolution.
    """

    intensity: np.ndarray
    depth: np.ndarray
    intrinsics: CameraIntrinsics

    def __post_init__(self):
        self.intensity = np.ascontiguousarray(self.intensity, dtype=np.float32)
        self.depth = np.ascontiguousarray(self.depth, dtype=np.float32)
        if self.intensity.ndim != 2:
            raise DimensionMismatch(f"intensity must be 2-D, got shape {self.intensity.shape}")
        if self.intensity.shape != self.depth.shape:
            raise DimensionMismatch(
                f"intensity {self.intensity.shape} and depth {self.depth.shape} differ"
            )

    @property
    def height(self) -> int:
        return self.intensity.shape[0]

    @property
    def width(self) -> int:
        return self.intensity.shape[1]


@dataclass(eq=False)
class GroundTruthPose:
    timestamp: float
    translation: np.ndarray  # (3,)
    quaternion: np.ndarray  # (qx, qy, qz, qw), unit norm


def parse_index_file(path) -> list[tuple[float, str]]:
    """Parse a "timestamp filename" index file.

    Blank lines and '#' comments are skipped.  Anything else that does not
    split into exactly a non-negative float and a filename raises
    MalformedLine carrying the 1-based line number.
    """
    path = Path(path)
    if not path.is_file():
        raise MissingFile(str(path))
    out = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 2:
                raise MalformedLine(path, lineno, f"expected 2 fields, got {len(parts)}")
            try:
                ts = float(parts[0])
            except ValueError:
                raise MalformedLine(path, lineno, f"bad timestamp {parts[0]!r}") from None
            if not np.isfinite(ts) or ts < 0:
                raise MalformedLine(path, lineno, f"bad timestamp {parts[0]!r}")
            out.append((ts, parts[1]))
    return out


def write_index_file(path, records, comments=()) -> None:
    """Write "timestamp filename" records, inverse of parse_index_file."""
    lines = [f"# {c}" for c in comments]
    lines.extend(f"{ts:.6f} {name}" for ts, name in records)
    Path(path).write_text("\n".join(lines) + "\n")


def associate(
    rgb: list[tuple[float, str]],
    depth: list[tuple[float, str]],
    max_dt: float = DEFAULT_MAX_DT,
) -> list[FrameRecord]:
    """Greedily pair color and depth records by nearest timestamp.

    Candidate pairs within max_dt are taken in order of |dt|, each record
    used at most once.  Result is sorted by color timestamp, which also
    becomes the FrameRecord timestamp.
    """
    if max_dt <= 0:
        raise ValueError("max_dt must be positive")
    rgb = sorted(rgb)
    depth = sorted(depth)
    dts = np.array([t for t, _ in depth])
    candidates = []
    for i, (tr, _) in enumerate(rgb):
        j0 = int(np.searchsorted(dts, tr - max_dt, side="left"))
        j1 = int(np.searchsorted(dts, tr + max_dt, side="right"))
        for j in range(j0, j1):
            candidates.append((abs(tr - dts[j]), i, j))
    candidates.sort()
    used_rgb: set[int] = set()
    used_depth: set[int] = set()
    pairs = []
    for _, i, j in candidates:
        if i in used_rgb or j in used_depth:
            continue
        used_rgb.add(i)
        used_depth.add(j)
        pairs.append(FrameRecord(rgb[i][0], rgb[i][1], depth[j][1]))
    pairs.sort(key=lambda rec: rec.timestamp)
    return pairs


def _read_png(path):
    if not os.path.isfile(path):
        raise MissingFile(str(path))
    img = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if img is None:
        raise UnsupportedPixelFormat(f"could not decode {path}")
    return img


def load_rgbd_frame(
    record: FrameRecord,
    intrinsics: CameraIntrinsics,
    depth_scale: float = DEFAULT_DEPTH_SCALE,
) -> RgbdFrame:
    """Load one associated frame into intensity + metric depth arrays.

    Intensity is the plain channel average scaled to [0, 1]; depth is
    raw16 / depth_scale with raw 0 kept at exactly 0.
    """
    if depth_scale <= 0:
        raise ValueError("depth_scale must be positive")
    color = _read_png(record.rgb_path)
    if color.ndim != 3 or color.shape[2] != 3 or color.dtype != np.uint8:
        raise UnsupportedPixelFormat(
            f"{record.rgb_path}: expected 8-bit 3-channel image, got dtype {color.dtype}, shape {color.shape}"
        )
    raw_depth = _read_png(record.depth_path)
    if raw_depth.ndim != 2 or raw_depth.dtype != np.uint16:
        raise UnsupportedPixelFormat(
            f"{record.depth_path}: expected 16-bit single-channel image, got dtype {raw_depth.dtype}, shape {raw_depth.shape}"
        )
    if color.shape[:2] != raw_depth.shape:
        raise DimensionMismatch(
            f"color {color.shape[:2]} vs depth {raw_depth.shape} for timestamp {record.timestamp}"
        )
    intensity = color.sum(axis=2, dtype=np.uint32).astype(np.float32) / (3.0 * 255.0)
    depth = raw_depth.astype(np.float32) / np.float32(depth_scale)
    return RgbdFrame(intensity, depth, intrinsics)


def load_groundtruth(path) -> list[GroundTruthPose]:
    """Read a TUM trajectory/groundtruth file, sorted by timestamp.

    Quaternions are renormalised; a norm further than 0.01 from unit is
    treated as a corrupt row and raises NonUnitQuaternion.
    """
    path = Path(path)
    if not path.is_file():
        raise MissingFile(str(path))
    poses = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) != 8:
                raise MalformedLine(path, lineno, f"expected 8 fields, got {len(parts)}")
            try:
                vals = [float(p) for p in parts]
            except ValueError:
                raise MalformedLine(path, lineno, "non-numeric field") from None
            if not all(np.isfinite(v) for v in vals):
                raise MalformedLine(path, lineno, "non-finite field")
            q = np.array(vals[4:8])
            norm = float(np.linalg.norm(q))
            if abs(norm - 1.0) > 0.01:
                raise NonUnitQuaternion(f"{path}:{lineno}: |q| = {norm:.6f}")
            poses.append(GroundTruthPose(vals[0], np.array(vals[1:4]), q / norm))
    poses.sort(key=lambda p: p.timestamp)
    return poses


def load_sequence(dataset_dir, max_dt: float = DEFAULT_MAX_DT) -> list[FrameRecord]:
    """Parse rgb.txt + depth.txt under dataset_dir and associate them.

    Returned records carry absolute paths.
    """
    root = Path(dataset_dir)
    rgb = [(t, str(root / rel)) for t, rel in parse_index_file(root / "rgb.txt")]
    depth = [(t, str(root / rel)) for t, rel in parse_index_file(root / "depth.txt")]
    return associate(rgb, depth, max_dt)
