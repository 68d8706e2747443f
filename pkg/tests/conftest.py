"""Shared fixtures: synthetic TUM-layout data and optional real sequences.

Real-data tests look for TUM sequences under $GAVO_TUM_ROOT (directories
like rgbd_dataset_freiburg1_xyz); when absent those tests fall back to
synthetic data or skip, so the suite runs hermetically by default.
"""

import os
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings

from gavo.dataset import (
    DEFAULT_DEPTH_SCALE,
    load_rgbd_frame,
    load_sequence,
    preset_intrinsics,
)
from gavo.synthetic import default_intrinsics, write_tum_sequence

settings.register_profile("suite", deadline=None)
settings.load_profile("suite")


def tum_sequence(name: str) -> Path | None:
    """Path to a real TUM sequence directory, or None if unavailable."""
    root = os.environ.get("GAVO_TUM_ROOT")
    if not root:
        return None
    cand = Path(root) / f"rgbd_dataset_{name}"
    if (cand / "rgb.txt").is_file() and (cand / "depth.txt").is_file():
        return cand
    return None


@pytest.fixture(scope="session")
def synth_seq_dir(tmp_path_factory) -> Path:
    """Small synthetic TUM-layout sequence on disk (8 frames, 160x120)."""
    root = tmp_path_factory.mktemp("synthseq")
    return write_tum_sequence(root / "seq", 8, width=160, height=120)


@pytest.fixture(scope="session")
def wobble_frames(synth_seq_dir):
    """The synthetic sequence loaded back through the PNG pipeline."""
    records = load_sequence(synth_seq_dir)
    k = default_intrinsics(160, 120)
    return [load_rgbd_frame(r, k, DEFAULT_DEPTH_SCALE) for r in records]


@pytest.fixture(scope="session")
def real_or_synth_frames(wobble_frames):
    """Ten frames loaded from disk: real freiburg1_xyz when available,
    otherwise synthetic ones rendered and reloaded through the same
    PNG loading path."""
    seq = tum_sequence("freiburg1_xyz")
    if seq is not None:
        records = load_sequence(seq)[:10]
        k = preset_intrinsics("fr1")
        return [load_rgbd_frame(r, k, DEFAULT_DEPTH_SCALE) for r in records]
    frames = list(wobble_frames)
    while len(frames) < 10:
        frames.append(frames[len(frames) % len(wobble_frames)])
    return frames[:10]


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
