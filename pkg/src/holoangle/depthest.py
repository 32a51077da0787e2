"""Depth estimation at held-out viewpoints.

Two geometric baselines fill the slot a learned estimator would take:
``nearest`` copies the depth map of the angularly closest training view,
``blend`` interpolates the two bracketing training views with
inverse-angular-distance weights. Both accept the query RGB image so a
learned model can share the interface; the baselines do not look at it.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import fileio
from .errors import ConfigurationError, DataValidationError
from .metrics import acc, mse, mse_bytes
from .viewgeom import schedule

BASELINES = ("nearest", "blend")


@dataclass(frozen=True)
class EstimatorState:
    baseline: str
    n: int
    train_angles_deg: tuple[float, ...]
    depths: tuple[np.ndarray, ...]

    @property
    def step_deg(self) -> float:
        return 360.0 / len(self.train_angles_deg)


def fit(train_frames, n: int, baseline: str = "blend") -> EstimatorState:
    """Index training depth maps by angle; the angles must be exactly ``schedule(n)``'s."""
    if baseline not in BASELINES:
        raise ConfigurationError(f"baseline must be one of {BASELINES}, got {baseline!r}")
    sched = schedule(n)
    by_angle = {}
    for fr in train_frames:
        a = fr.pose.angle_deg % 360.0
        if a in by_angle:
            raise DataValidationError(f"duplicate training view at {a} deg")
        by_angle[a] = fr.depth
    expected = set(sched.train_angles_deg)
    got = set(by_angle)
    if got != expected:
        missing = sorted(expected - got)
        extra = sorted(got - expected)
        raise DataValidationError(f"training views do not match level n={n}: missing {missing}, extra {extra}")
    shapes = {d.shape for d in by_angle.values()}
    if len(shapes) != 1:
        raise DataValidationError(f"training depth maps differ in size: {shapes}")
    depths = []
    for a in sched.train_angles_deg:
        d = np.array(by_angle[a], dtype=np.uint8)
        d.flags.writeable = False
        depths.append(d)
    return EstimatorState(baseline=baseline, n=sched.level.n,
                          train_angles_deg=sched.train_angles_deg, depths=tuple(depths))


def estimate(state: EstimatorState, rgb, query_angle_deg: float) -> np.ndarray:
    """Depth bytes at ``query_angle_deg``. ``rgb`` is unused by the baselines."""
    count = len(state.train_angles_deg)
    step = state.step_deg
    q = float(query_angle_deg) % 360.0
    lower = int(q // step) % count
    upper = (lower + 1) % count
    d_lower = q - lower * step
    if d_lower == 0:
        return state.depths[lower].copy()
    d_upper = step - d_lower
    if state.baseline == "nearest":
        if d_lower < d_upper:
            pick = lower
        elif d_upper < d_lower:
            pick = upper
        else:  # exact midpoint: numerically smaller angle
            pick = lower if state.train_angles_deg[lower] < state.train_angles_deg[upper] else upper
        return state.depths[pick].copy()
    w_lower = d_upper / step
    mixed = w_lower * state.depths[lower].astype(np.float64) + (1.0 - w_lower) * state.depths[upper]
    return np.floor(mixed + 0.5).astype(np.uint8)


@dataclass(frozen=True)
class ViewError:
    angle_deg: float
    mse: float
    acc: float
    mse_bytes: float


def evaluate(state: EstimatorState, test_frames) -> list[ViewError]:
    out = []
    for fr in test_frames:
        est = estimate(state, fr.rgb, fr.pose.angle_deg)
        if est.shape != fr.depth.shape:
            raise DataValidationError(
                f"estimate {est.shape} and ground truth {fr.depth.shape} differ at {fr.pose.angle_deg} deg")
        out.append(ViewError(fr.pose.angle_deg, mse(est, fr.depth), acc(est, fr.depth),
                             mse_bytes(est, fr.depth)))
    return out


def write_estimate(view_dir, depth: np.ndarray, state: EstimatorState) -> None:
    view_dir = Path(view_dir)
    fileio.write_pgm(view_dir / "depth_est.pgm", depth)
    fileio.write_json(view_dir / "est_meta.json", {"baseline": state.baseline, "n": state.n})
