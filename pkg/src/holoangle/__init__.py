"""Central-angle study pipeline for 360-degree holographic content: multi-view
RGB-depth capture, held-out depth estimation, layer-based hologram synthesis
with Lee encoding, numerical reconstruction, and quality-versus-angle sweeps."""

from .errors import ConfigurationError, DataValidationError, DatasetIOError, NumericError
from .viewgeom import CameraPose, CentralAngleLevel, ViewSchedule, camera_pose, central_angle, schedule
from .scenegen import DepthMapping, Frame, SceneSpec, depth_quantize, generate_dataset, pair_scene, render_view
from .depthest import EstimatorState, estimate, evaluate, fit
from .holo import (ComplexField, LeeHologram, LeePlanes, OpticsConfig, lee_decode, lee_encode, propagate,
                   synthesize)
from .recon import Reconstruction, focus_scan, reconstruct, sharpness
from .metrics import MetricReport, TimeModel, acc, cgh_acc, mse, training_time
from .sweep import KneeResult, SweepConfig, SweepRecord, detect_knee, report, run_sweep

__version__ = "0.1.0"
