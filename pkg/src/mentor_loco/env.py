"""Episode lifecycle: observation assembly, reward, mentor dropout, termination."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import physics as ph
from .actuator import MotorSpec, PDGains
from .controller import ACTION_DIM, TrajectoryGenerator, leg_ik, tg_phase_features, tg_step
from .errors import ConfigurationError, EpisodeFinished, SimulationDiverged
from .mentor import (GOAL_RADIUS, WALKING_HEIGHT, MentorParams, TargetState, goal_observation,
                     initial_target, update_target)
from .physics import ContactParams, RobotModel, RobotState, Terrain
from .sensors import LidarSpec, _scan
from .terrain import CourseSpec

CONTROL_DT = 0.01
CONTACT_THRESHOLD = 1.0  # N, foot counts as touching above this


@dataclass(frozen=True)
class EnvConfig:
    action_repeat: int = 10
    horizon: int = 1000
    goal_bonus: float = 10.0
    dropout: float = 0.0
    min_height: float = 0.12
    max_pitch: float = 1.0
    goal_radius: float = GOAL_RADIUS
    walking_height: float = WALKING_HEIGHT
    init_jitter: float = 0.01
    model: RobotModel = field(default_factory=RobotModel)
    motor: MotorSpec = field(default_factory=MotorSpec)
    gains: PDGains = field(default_factory=PDGains)
    contact: ContactParams = field(default_factory=ContactParams)
    lidar: LidarSpec = field(default_factory=LidarSpec)
    tg: TrajectoryGenerator = field(default_factory=TrajectoryGenerator)

    def __post_init__(self):
        if self.action_repeat < 1:
            raise ConfigurationError("action_repeat must be >= 1")
        if not self.goal_bonus > 0:
            raise ConfigurationError("goal_bonus must be positive")
        if not 0.0 <= self.dropout <= 1.0:
            raise ConfigurationError(f"dropout must be in [0, 1], got {self.dropout}")
        if self.horizon < 1:
            raise ConfigurationError("horizon must be >= 1")

    @property
    def control_frequency(self) -> float:
        return 1.0 / (self.action_repeat * ph.DT)

    @property
    def layout(self) -> "ObservationLayout":
        return ObservationLayout(self.lidar.ray_count)


@dataclass(frozen=True)
class ObservationLayout:
    ray_count: int
    act_dim: int = ACTION_DIM

    @property
    def blocks(self) -> dict[str, slice]:
        sizes = [("goal", 3), ("lidar", self.ray_count), ("imu", 5), ("encoder", 4),
                 ("prev_action", self.act_dim), ("tg_phase", 2)]
        out, k = {}, 0
        for name, n in sizes:
            out[name] = slice(k, k + n)
            k += n
        return out

    @property
    def dim(self) -> int:
        return 3 + self.ray_count + 5 + 4 + self.act_dim + 2


@dataclass
class StepResult:
    observation: np.ndarray
    reward: float
    done: bool
    reason: Optional[str]  # "goal" | "fall" | "timeout"
    info: dict


def reward(prev_d: float, cur_d: float, reached: bool, bonus: float) -> float:
    """Progress toward the target plus a one-off bonus on arrival."""
    return (prev_d - cur_d) + (bonus if reached else 0.0)


def progress_reward(target: TargetState, com, mentor: MentorParams, course: CourseSpec,
                    config: EnvConfig):
    """Reward for moving the CoM to ``com`` and the updated target.

    Returns ``(reward, target', event)`` with event ``"checkpoint"``, ``"goal"``
    or None. The checkpoint uses the mentor's radius, the final goal uses
    ``config.goal_radius``.
    """
    cur_d = math.hypot(com[0] - target.x, com[1] - target.z)
    event = None
    if not target.collected:
        reached = cur_d <= mentor.radius
        if reached:
            event = "checkpoint"
    else:
        reached = cur_d <= config.goal_radius
        if reached:
            event = "goal"
    r = reward(target.prev_distance, cur_d, reached, config.goal_bonus)
    return r, update_target(target, com, mentor, course, config.walking_height), event


DUMMY_GOAL = np.zeros(3)


def apply_dropout(goal_block, p_drop: float, rng: np.random.Generator) -> np.ndarray:
    """Replace the whole goal block by the dummy (zeros) with probability p_drop.

    Exactly one uniform draw per call, whatever ``p_drop`` is.
    """
    if not 0.0 <= p_drop <= 1.0:
        raise ConfigurationError(f"dropout probability must be in [0, 1], got {p_drop}")
    u = rng.random()
    return DUMMY_GOAL.copy() if u < p_drop else np.asarray(goal_block, dtype=np.float64)


def standing_pose(config: EnvConfig, rng: Optional[np.random.Generator] = None,
                  x: float = 0.0) -> RobotState:
    """Nominal stance (feet under hips) with optional joint jitter, feet on the ground."""
    tg = config.tg
    hip, knee, _ = leg_ik(0.0, -tg.stance_depth, tg.thigh, tg.calf)
    joints = np.array([hip, knee, hip, knee])
    if rng is not None and config.init_jitter > 0:
        joints = joints + rng.uniform(-config.init_jitter, config.init_jitter, 4)
    s = RobotState.make(x=x, z=0.0, joints=joints)
    feet = ph.foot_positions(s, config.model)
    z0 = config.model.foot_radius - feet[:, 1].min() + 1e-4
    return RobotState.make(x=x, z=z0, joints=joints)


class Episode:
    """Mutable per-episode state. Not shared between threads."""

    def __init__(self, config: EnvConfig, course: CourseSpec, mentor: MentorParams,
                 seed, record: bool = False):
        self.config = config
        self.course = course
        self.mentor = mentor
        self.rng = np.random.default_rng(seed)
        self.terrain = Terrain(course)
        self.layout = config.layout
        self._P = config.model.pack()
        self._C = config.contact.pack()
        self._gains = np.array([config.gains.kp, config.gains.kd])
        self._motor = np.array([config.motor.peak_torque, config.motor.rated_speed,
                                config.motor.zero_torque_speed])
        self._limits = config.model.joint_limits
        self._angles = config.lidar.angles()
        self.dropout = config.dropout

        state = standing_pose(config, self.rng)
        self.q = np.array(state.q)
        self.qd = np.array(state.qd)
        self.tg = config.tg
        self.prev_action = np.zeros(ACTION_DIM)
        self.t = 0
        self.done = False
        self.reason: Optional[str] = None
        self.total_reward = 0.0
        com = ph._com(self.q, self._P)
        self.start_com = com
        self.target: TargetState = initial_target(com, mentor, course, config.walking_height)
        self.bonus_events = 0
        self.records: Optional[list] = [] if record else None
        self._tau = np.zeros(4)
        self._foot_force = np.zeros(2)
        self._torso_force = np.zeros(1)
        self.observation = self._observe(com)

    @property
    def state(self) -> RobotState:
        return RobotState(self.q, self.qd)

    def com(self) -> tuple[float, float]:
        return ph._com(self.q, self._P)

    def _observe(self, com) -> np.ndarray:
        cfg = self.config
        g = goal_observation(com, self.q[2], self.target)
        g = apply_dropout(g, self.dropout, self.rng)
        lidar = np.empty(cfg.lidar.ray_count)
        _scan(self.q[0], self.q[1], self.q[2], self._angles, cfg.lidar.max_range,
              cfg.lidar.mount_forward, cfg.lidar.mount_up, self.terrain.edges,
              self.terrain.heights, lidar)
        if cfg.lidar.noise_std > 0:
            lidar = np.clip(lidar + self.rng.normal(0, cfg.lidar.noise_std, lidar.shape), 0, 1)
        imu = (0.0, self.q[2], self.qd[2], 0.0, 0.0)
        return np.concatenate((g, lidar, imu, self.q[3:], self.prev_action,
                               tg_phase_features(self.tg)))

    def step(self, action) -> StepResult:
        if self.done:
            raise EpisodeFinished("episode already finished; call reset()")
        cfg = self.config
        a = np.clip(np.asarray(action, dtype=np.float64).reshape(ACTION_DIM), -1.0, 1.0)
        if not np.all(np.isfinite(a)):
            raise ConfigurationError("non-finite action")
        self.tg, q_des = tg_step(self.tg, a, CONTROL_DT)
        q_des = np.clip(q_des, self._limits[:, 0], self._limits[:, 1])
        q, qd, status = ph._control_step(
            self.q, self.qd, q_des, self._gains, self._motor, cfg.action_repeat, self._P,
            self._C, self.terrain.edges, self.terrain.heights, ph.DT, self._tau,
            self._foot_force, self._torso_force)
        if status >= 0:
            raise SimulationDiverged(self.t * cfg.action_repeat + int(status))
        self.q, self.qd = q, qd
        self.t += 1
        self.prev_action = a

        com = ph._com(q, self._P)
        r, self.target, event = progress_reward(self.target, com, self.mentor, self.course, cfg)
        if event is not None:
            self.bonus_events += 1

        reason = None
        if event == "goal":
            reason = "goal"
        elif (q[1] < cfg.min_height or abs(q[2]) > cfg.max_pitch
              or self._torso_force[0] > 0.0):
            reason = "fall"
        elif self.t >= cfg.horizon:
            reason = "timeout"
        self.done = reason is not None
        self.reason = reason
        self.total_reward += r

        obs = self._observe(com)
        self.observation = obs
        info = {"com": com, "event": event}
        if self.records is not None:
            info = self._record(com, r, event or reason)
        return StepResult(obs, r, self.done, reason, info)

    def _record(self, com, r, event) -> dict:
        n_motor = self.config.model.motors_per_joint
        tau = self._tau.copy()
        qd = self.qd[3:].copy()
        power = float(n_motor * np.maximum(tau * qd, 0.0).sum())
        feet = np.empty((2, 2))
        ph._feet(self.q, self._P, feet)
        rec = {
            "t": round(self.t * CONTROL_DT, 10),
            "com": [com[0], com[1]],
            "com_vel": list(ph._com_vel(self.q, self.qd, self._P)),
            "pitch": float(self.q[2]),
            "feet": feet.tolist(),
            "contacts": [bool(f > CONTACT_THRESHOLD) for f in self._foot_force],
            "q": self.q[3:].tolist(),
            "qd": qd.tolist(),
            "tau": tau.tolist(),
            "power": power,
            "reward": float(r),
            "event": event,
        }
        self.records.append(rec)
        return rec


def reset(config: EnvConfig, course: CourseSpec, mentor: MentorParams, seed,
          record: bool = False) -> tuple[np.ndarray, Episode]:
    ep = Episode(config, course, mentor, seed, record=record)
    return ep.observation, ep


def env_step(episode: Episode, action) -> StepResult:
    return episode.step(action)
