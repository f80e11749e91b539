"""LiDAR fan, IMU and joint encoders."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import ConfigurationError
from .physics import RobotState, Terrain


@dataclass(frozen=True)
class LidarSpec:
    """Planar fan swept from forward-horizontal, through straight down, to
    backward-horizontal (angles in the body frame)."""

    ray_count: int = 40
    start_angle: float = 0.0
    end_angle: float = -math.pi
    max_range: float = 5.0
    mount_forward: float = 0.0
    mount_up: float = 0.0
    noise_std: float = 0.0

    def __post_init__(self):
        if self.ray_count < 1:
            raise ConfigurationError("ray_count must be >= 1")
        if not self.max_range > 0:
            raise ConfigurationError("max_range must be positive")

    def angles(self) -> np.ndarray:
        if self.ray_count == 1:
            return np.array([0.5 * (self.start_angle + self.end_angle)])
        return np.linspace(self.start_angle, self.end_angle, self.ray_count)


@njit(cache=True)
def _cast(ox, oz, dx, dz, max_range, edges, heights):
    """Distance along a unit ray to the first solid point of the profile."""
    n = edges.shape[0]
    seg = 0
    while seg < n and ox >= edges[seg]:
        seg += 1
    if oz < heights[seg]:
        return 0.0
    t = 0.0
    while t < max_range:
        if dx > 0.0:
            t_exit = (edges[seg] - ox) / dx if seg < n else math.inf
        elif dx < 0.0:
            t_exit = (edges[seg - 1] - ox) / dx if seg > 0 else math.inf
        else:
            t_exit = math.inf
        h = heights[seg]
        # wall face on entering this segment
        if oz + dz * t < h:
            return t
        if dz < 0.0:
            t_hit = (h - oz) / dz
            if t_hit <= t_exit:
                return max(t_hit, t)
        if t_exit == math.inf:
            return math.inf
        t = t_exit
        seg += 1 if dx > 0.0 else -1
    return math.inf


@njit(cache=True)
def _scan(x, z, pitch, angles, max_range, mount_f, mount_u, edges, heights, out):
    cp = math.cos(pitch)
    sp = math.sin(pitch)
    ox = x + mount_f * cp - mount_u * sp
    oz = z + mount_f * sp + mount_u * cp
    for i in range(angles.shape[0]):
        a = pitch + angles[i]
        d = _cast(ox, oz, math.cos(a), math.sin(a), max_range, edges, heights)
        out[i] = 1.0 if d >= max_range else d / max_range


def lidar_scan(state: RobotState, spec: LidarSpec, course, rng=None) -> np.ndarray:
    """Normalized depths in [0, 1]; 1.0 means nothing within ``max_range``."""
    t = course if isinstance(course, Terrain) else Terrain(course)
    out = np.empty(spec.ray_count)
    _scan(state.q[0], state.q[1], state.q[2], spec.angles(), spec.max_range,
          spec.mount_forward, spec.mount_up, t.edges, t.heights, out)
    if spec.noise_std > 0 and rng is not None:
        out = np.clip(out + rng.normal(0.0, spec.noise_std, out.shape), 0.0, 1.0)
    return out


def imu_read(state: RobotState) -> np.ndarray:
    """[roll, pitch, pitch rate, roll rate, yaw rate]; out-of-plane slots are 0."""
    return np.array([0.0, state.pitch, state.pitch_rate, 0.0, 0.0])


def encoder_read(state: RobotState) -> np.ndarray:
    return np.array(state.joints, dtype=np.float64)
