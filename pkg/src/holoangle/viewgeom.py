"""Central angles, train/test viewpoint schedules and camera poses.

Conventions: right-handed world, the capture track lies in the z = 0 plane,
angle 0 sits on the +x axis and angles grow counterclockwise seen from +z.
Angles are kept in degrees; 360 / 2**n is an exact binary fraction so no
rounding creeps in across a sweep.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

N_MIN = 2
N_MAX = 9
DEFAULT_RADIUS_M = 0.20
WORLD_UP = np.array([0.0, 0.0, 1.0])

_EXACT_COS_SIN = {0: (1.0, 0.0), 90: (0.0, 1.0), 180: (-1.0, 0.0), 270: (0.0, -1.0)}


def cos_sin_deg(angle_deg: float) -> tuple[float, float]:
    """cos and sin of an angle in degrees, exact at multiples of 90."""
    a = float(angle_deg) % 360.0
    if a in _EXACT_COS_SIN:
        return _EXACT_COS_SIN[int(a)]
    r = np.deg2rad(a)
    return float(np.cos(r)), float(np.sin(r))


def angular_distance(a_deg: float, b_deg: float) -> float:
    """Shortest distance between two track angles, in [0, 180]."""
    d = abs(float(a_deg) - float(b_deg)) % 360.0
    return min(d, 360.0 - d)


def _check_level(n) -> int:
    if isinstance(n, bool) or int(n) != n:
        raise ConfigurationError(f"level n must be an integer, got {n!r}")
    n = int(n)
    if not N_MIN <= n <= N_MAX:
        raise ConfigurationError(f"level n must satisfy {N_MIN} <= n <= {N_MAX}, got {n}")
    return n


@dataclass(frozen=True)
class CentralAngleLevel:
    n: int
    angle_deg: float

    @property
    def views(self) -> int:
        return 2**self.n


def central_angle(n: int) -> CentralAngleLevel:
    """Central angle between adjacent viewpoints for level ``n``: 360 / 2**n degrees."""
    n = _check_level(n)
    return CentralAngleLevel(n=n, angle_deg=360.0 / 2**n)


@dataclass(frozen=True)
class ViewSchedule:
    level: CentralAngleLevel
    train_angles_deg: tuple[float, ...]
    test_angles_deg: tuple[float, ...]


def schedule(n: int) -> ViewSchedule:
    """Training angles k*theta and held-out midpoints k*theta + theta/2, k = 0..2**n - 1."""
    level = central_angle(n)
    step = level.angle_deg
    count = level.views
    train = tuple(k * step for k in range(count))
    test = tuple(k * step + step / 2 for k in range(count))
    return ViewSchedule(level=level, train_angles_deg=train, test_angles_deg=test)


@dataclass(frozen=True)
class CameraPose:
    angle_deg: float
    radius_m: float
    position: np.ndarray
    forward: np.ndarray

    @property
    def right(self) -> np.ndarray:
        return np.cross(self.forward, WORLD_UP)

    @property
    def up(self) -> np.ndarray:
        return WORLD_UP.copy()


def camera_pose(angle_deg: float, radius_m: float = DEFAULT_RADIUS_M) -> CameraPose:
    """Camera on the circular track at ``angle_deg``, looking at the origin."""
    if not radius_m > 0:
        raise ConfigurationError(f"track radius must be positive, got {radius_m}")
    c, s = cos_sin_deg(angle_deg)
    position = np.array([radius_m * c, radius_m * s, 0.0])
    forward = np.array([-c, -s, 0.0])
    return CameraPose(angle_deg=float(angle_deg), radius_m=float(radius_m),
                      position=position, forward=forward)
