"""UAV tracking from multi-scan solid-state LiDAR integration.

Pipeline: simulate scans of a moving target, accumulate them into frames,
track with a KF / EKF / constant-velocity detector, and score the result
against ground truth with aligned absolute position error statistics.
"""

from .config import ConfigError, RunConfig, default_config, load_config, parse_config, render_config
from .evaluate import (
    AlignedPairs,
    ApeReport,
    EmptyOverlapError,
    Se3Transform,
    ape_stats,
    associate,
    evaluate_ape,
    umeyama_align,
)
from .frames import DiscontiguousScansError, Frame, InvalidIntegrationError, frame_stream, integrate
from .geometry import EmptyCloudError, KdTree, build_kdtree, centroid, radius_search
from .simulate import (
    Scan,
    SensorModel,
    TargetModel,
    TimeDomainError,
    Trajectory,
    gen_ground_truth,
    gen_pattern,
    simulate_scan,
    simulate_scans,
)
from .tracking import (
    EkfState,
    Measurement,
    TrackerConfig,
    TrackResult,
    TrackStatus,
    UavState,
    cv_step,
    ekf_predict,
    ekf_update,
    kf_predict,
    kf_update,
    track,
)

__version__ = "0.1.0"
