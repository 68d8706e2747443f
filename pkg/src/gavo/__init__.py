"""Dense RGB-D visual odometry driven by a genetic-algorithm motion search."""

from .dataset import (
    CameraIntrinsics,
    FrameRecord,
    GroundTruthPose,
    RgbdFrame,
    associate,
    load_groundtruth,
    load_rgbd_frame,
    load_sequence,
    parse_index_file,
)
from .evaluation import (
    Trajectory,
    accumulate,
    match_to_groundtruth,
    per_frame_drift_series,
    relative_pose_error,
    rmse_translational,
)
from .ga import EstimationReport, GaConfig, estimate_motion
from .se3 import RigidTransform, compose, exp_twist, from_quaternion, hat, inverse
from .warp import FramePyramid, ResidualStats, build_pyramid, photometric_error

__version__ = "0.1.0"

__all__ = [
    "CameraIntrinsics",
    "EstimationReport",
    "FrameRecord",
    "FramePyramid",
    "GaConfig",
    "GroundTruthPose",
    "ResidualStats",
    "RgbdFrame",
    "RigidTransform",
    "Trajectory",
    "accumulate",
    "associate",
    "build_pyramid",
    "compose",
    "estimate_motion",
    "exp_twist",
    "from_quaternion",
    "hat",
    "inverse",
    "load_groundtruth",
    "load_rgbd_frame",
    "load_sequence",
    "match_to_groundtruth",
    "parse_index_file",
    "per_frame_drift_series",
    "photometric_error",
    "relative_pose_error",
    "rmse_translational",
]
