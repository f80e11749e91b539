"""Checkpoint placement and target bookkeeping.

A mentor is five numbers. The first four place a checkpoint relative to the
gap, scaled by the gap size; the fifth is the radius within which the
checkpoint counts as collected::

    C_x = g_x + g_s * M1 + M2
    C_z = h   + g_s * M3 + M4
    radius = M5

Once collected, the target jumps to the end of the track at walking height.
"""

from __future__ import annotations

import math
from dataclasses import astuple, dataclass, replace

import numpy as np

from .errors import ConfigurationError
from .terrain import CourseSpec

WALKING_HEIGHT = 0.3
GOAL_RADIUS = 0.3


@dataclass(frozen=True)
class MentorParams:
    m1: float = 0.0
    m2: float = 0.0
    m3: float = 0.0
    m4: float = 0.0
    m5: float = 0.3

    def __post_init__(self):
        if not self.m5 > 0:
            raise ConfigurationError(f"checkpoint radius must be positive, got {self.m5}")

    @property
    def radius(self) -> float:
        return self.m5

    def as_tuple(self) -> tuple:
        return astuple(self)

    def to_dict(self) -> dict:
        return dict(zip(("m1", "m2", "m3", "m4", "m5"), self.as_tuple()))

    @classmethod
    def from_sequence(cls, values) -> "MentorParams":
        return cls(*map(float, values))


@dataclass(frozen=True)
class TargetState:
    x: float
    z: float
    collected: bool
    prev_distance: float

    @property
    def position(self) -> tuple[float, float]:
        return self.x, self.z


def checkpoint_position(course: CourseSpec, m: MentorParams,
                        h: float = WALKING_HEIGHT) -> tuple[float, float]:
    cx = course.gap_x + course.gap_size * m.m1 + m.m2
    cz = h + course.gap_size * m.m3 + m.m4
    return cx, cz


def goal_position(course: CourseSpec, h: float = WALKING_HEIGHT) -> tuple[float, float]:
    return course.goal_x, h


def _dist(a, b) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def initial_target(robot_com, m: MentorParams, course: CourseSpec,
                   h: float = WALKING_HEIGHT) -> TargetState:
    cx, cz = checkpoint_position(course, m, h)
    return TargetState(cx, cz, False, _dist(robot_com, (cx, cz)))


def update_target(target: TargetState, robot_com, m: MentorParams, course: CourseSpec,
                  h: float = WALKING_HEIGHT) -> TargetState:
    """Collect the checkpoint if within its radius, else advance the baseline.

    On collection the distance baseline is reset to the new target so the
    target jump adds nothing to the dense reward.
    """
    d = _dist(robot_com, target.position)
    if not target.collected and d <= m.radius:
        gx, gz = goal_position(course, h)
        return TargetState(gx, gz, True, _dist(robot_com, (gx, gz)))
    return replace(target, prev_distance=d)


def goal_observation(robot_com, robot_pitch: float, target: TargetState) -> np.ndarray:
    """(distance, relative heading, relative height) to the current target.

    Heading is always zero in the sagittal plane; the slot is kept so the
    observation layout matches the full 3D task.
    """
    g_d = _dist(robot_com, target.position)
    g_z = target.z - robot_com[1]
    return np.array([g_d, 0.0, g_z])


def sample_mentor(rng: np.random.Generator, ranges) -> MentorParams:
    """Draw each of M1..M5 uniformly from ``ranges`` (five (lo, hi) pairs)."""
    ranges = [tuple(map(float, r)) for r in ranges]
    if len(ranges) != 5 or any(lo > hi for lo, hi in ranges):
        raise ConfigurationError(f"need five (lo, hi) ranges, got {ranges!r}")
    if ranges[4][0] <= 0:
        raise ConfigurationError("checkpoint radius range must be positive")
    lo = np.array([r[0] for r in ranges])
    hi = np.array([r[1] for r in ranges])
    u = rng.random(5)
    return MentorParams.from_sequence(lo + u * (hi - lo))
