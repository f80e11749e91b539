"""Trajectory generator modulated by a small tanh network (PMTG style).

The network sees the normalized observation and outputs six numbers in
[-1, 1]: a frequency change, a swing-height change, and four residual joint
offsets added on top of the generator's inverse-kinematics targets.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigurationError

log = logging.getLogger(__name__)

TWO_PI = 2.0 * math.pi
ACTION_DIM = 6
FORMAT_VERSION = 1


# ---------------------------------------------------------------------------
# trajectory generator


@dataclass(frozen=True)
class TrajectoryGenerator:
    phase: float = 0.0
    base_frequency: float = 1.5
    frequency_range: float = 1.0
    max_frequency: float = 2.5
    amplitude: float = 0.05  # swing height, m
    amplitude_range: float = 0.05
    stride: float = 0.05  # half stride length, m
    stance_depth: float = 0.28  # foot center below hip, m
    leg_offsets: tuple = (0.0, math.pi)
    residual_scale: float = 0.3  # rad per unit action
    thigh: float = 0.2
    calf: float = 0.2

    def __post_init__(self):
        if self.base_frequency < 0 or self.max_frequency < self.base_frequency:
            raise ConfigurationError("need 0 <= base_frequency <= max_frequency")
        if self.amplitude < 0 or self.amplitude_range < 0:
            raise ConfigurationError("amplitudes must be >= 0")


def foot_target(phase: float, amplitude: float, stride: float, depth: float):
    """Foot position relative to the hip for a phase in [0, 2*pi).

    First half: stance, a straight line from +stride to -stride at ``depth``.
    Second half: swing, a half ellipse of height ``amplitude`` back to +stride.
    """
    phase = phase % TWO_PI
    if phase < math.pi:
        u = phase / math.pi
        return stride * (1.0 - 2.0 * u), -depth
    u = (phase - math.pi) / math.pi
    return -stride * math.cos(math.pi * u), -depth + amplitude * math.sin(math.pi * u)


def leg_ik(x: float, z: float, thigh: float, calf: float):
    """(hip, knee) angles putting the foot at (x, z) relative to the hip.

    Zero angles mean a straight leg hanging down; the knee bends positive.
    Unreachable targets are pulled onto the reachable annulus; the returned
    flag says whether that happened.
    """
    r = math.hypot(x, z)
    r_max = thigh + calf
    r_min = max(abs(thigh - calf), 0.05 * r_max)
    clamped = False
    if r > r_max or r < r_min:
        clamped = True
        target = min(max(r, r_min), r_max)
        if r < 1e-12:
            x, z, r = 0.0, -target, target
        else:
            x, z, r = x * target / r, z * target / r, target
    c = (r * r - thigh * thigh - calf * calf) / (2.0 * thigh * calf)
    knee = math.acos(min(1.0, max(-1.0, c)))
    hip = math.atan2(x, -z) - math.atan2(calf * math.sin(knee), thigh + calf * math.cos(knee))
    return hip, knee, clamped


def leg_fk(hip: float, knee: float, thigh: float, calf: float):
    b = hip + knee
    return thigh * math.sin(hip) + calf * math.sin(b), -thigh * math.cos(hip) - calf * math.cos(b)


def tg_frequency(tg: TrajectoryGenerator, action) -> float:
    f = tg.base_frequency + float(action[0]) * tg.frequency_range
    return min(max(f, 0.0), tg.max_frequency)


def tg_targets(tg: TrajectoryGenerator, phase: float, amplitude: float) -> np.ndarray:
    q = np.empty(4)
    for leg in range(2):
        x, z = foot_target(phase + tg.leg_offsets[leg], amplitude, tg.stride, tg.stance_depth)
        hip, knee, clamped = leg_ik(x, z, tg.thigh, tg.calf)
        if clamped:
            log.debug("IK target (%.3f, %.3f) out of reach, clamped", x, z)
        q[2 * leg] = hip
        q[2 * leg + 1] = knee
    return q


def tg_step(tg: TrajectoryGenerator, action, dt_control: float = 0.01):
    """Advance the phase and return ``(tg', q_des)``."""
    if abs(dt_control - 0.01) > 1e-12:
        raise ValueError(f"trajectory generator runs at 100 Hz, got dt={dt_control}")
    action = np.clip(np.asarray(action, dtype=np.float64), -1.0, 1.0)
    f = tg_frequency(tg, action)
    amp = max(0.0, tg.amplitude + float(action[1]) * tg.amplitude_range)
    phase = (tg.phase + TWO_PI * f * dt_control) % TWO_PI
    q_des = tg_targets(tg, phase, amp) + tg.residual_scale * action[2:6]
    return replace(tg, phase=phase), q_des


def tg_phase_features(tg: TrajectoryGenerator) -> np.ndarray:
    return np.array([math.sin(tg.phase), math.cos(tg.phase)])


# ---------------------------------------------------------------------------
# observation normalizer


@dataclass
class RunningStats:
    """Per-dimension running mean/variance (Welford, mergeable)."""

    count: int
    mean: np.ndarray
    m2: np.ndarray

    @classmethod
    def empty(cls, dim: int) -> "RunningStats":
        return cls(0, np.zeros(dim), np.zeros(dim))

    @property
    def var(self) -> np.ndarray:
        if self.count == 0:
            return np.ones_like(self.mean)
        return self.m2 / self.count

    def copy(self) -> "RunningStats":
        return RunningStats(self.count, self.mean.copy(), self.m2.copy())

    def push(self, x) -> None:
        x = np.asarray(x, dtype=np.float64)
        self.count += 1
        delta = x - self.mean
        self.mean = self.mean + delta / self.count
        self.m2 = self.m2 + delta * (x - self.mean)

    def merge(self, other: "RunningStats") -> "RunningStats":
        if other.count == 0:
            return self.copy()
        if self.count == 0:
            return other.copy()
        n = self.count + other.count
        delta = other.mean - self.mean
        mean = self.mean + delta * other.count / n
        m2 = self.m2 + other.m2 + delta**2 * self.count * other.count / n
        return RunningStats(n, mean, m2)

    def to_dict(self) -> dict:
        return {"count": self.count, "mean": self.mean.tolist(), "m2": self.m2.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "RunningStats":
        return cls(int(d["count"]), np.asarray(d["mean"], float), np.asarray(d["m2"], float))


def observation_normalizer_update(stats: RunningStats, obs) -> RunningStats:
    out = stats.copy()
    out.push(obs)
    return out


NORM_EPS = 1e-8
NORM_CLIP = 5.0


def normalize(stats: RunningStats, obs) -> np.ndarray:
    z = (np.asarray(obs, dtype=np.float64) - stats.mean) / np.sqrt(stats.var + NORM_EPS)
    return np.clip(z, -NORM_CLIP, NORM_CLIP)


# ---------------------------------------------------------------------------
# policy network


@dataclass
class PolicyParams:
    obs_dim: int
    act_dim: int = ACTION_DIM
    hidden: tuple = (32, 32)
    weights: np.ndarray = field(default=None, repr=False)
    normalizer: Optional[RunningStats] = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.hidden = tuple(int(h) for h in self.hidden)
        n = self.num_params
        if self.weights is None:
            self.weights = np.zeros(n)
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.shape != (n,):
            raise ConfigurationError(
                f"weight vector has shape {self.weights.shape}, expected ({n},)")
        if self.normalizer is None:
            self.normalizer = RunningStats.empty(self.obs_dim)
        if self.normalizer.mean.shape != (self.obs_dim,):
            raise ConfigurationError("normalizer dimension does not match obs_dim")

    @property
    def layer_sizes(self) -> list[int]:
        return [self.obs_dim, *self.hidden, self.act_dim]

    @property
    def num_params(self) -> int:
        s = self.layer_sizes
        return sum(s[i] * s[i + 1] + s[i + 1] for i in range(len(s) - 1))

    def layers(self, weights=None):
        w = self.weights if weights is None else weights
        s = self.layer_sizes
        out, k = [], 0
        for i in range(len(s) - 1):
            n_in, n_out = s[i], s[i + 1]
            W = w[k:k + n_in * n_out].reshape(n_out, n_in)
            k += n_in * n_out
            b = w[k:k + n_out]
            k += n_out
            out.append((W, b))
        return out

    @classmethod
    def initial(cls, obs_dim: int, rng: np.random.Generator, act_dim: int = ACTION_DIM,
                hidden=(32, 32), meta: Optional[dict] = None) -> "PolicyParams":
        """Random hidden layers, zero output layer: the first action is zero."""
        p = cls(obs_dim, act_dim, hidden, meta=dict(meta or {}))
        chunks = []
        for i, (W, b) in enumerate(p.layers()):
            if i < len(p.hidden):
                chunks.append(rng.normal(0.0, 1.0 / math.sqrt(W.shape[1]), W.size))
            else:
                chunks.append(np.zeros(W.size))
            chunks.append(np.zeros(b.size))
        p.weights = np.concatenate(chunks)
        return p

    def with_weights(self, weights) -> "PolicyParams":
        return PolicyParams(self.obs_dim, self.act_dim, self.hidden, np.array(weights, float),
                            self.normalizer.copy(), dict(self.meta))

    def to_dict(self) -> dict:
        return {
            "format_version": FORMAT_VERSION,
            "obs_dim": self.obs_dim,
            "act_dim": self.act_dim,
            "hidden": list(self.hidden),
            "activation": "tanh",
            "weights": self.weights.tolist(),
            "normalizer": self.normalizer.to_dict(),
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PolicyParams":
        if d.get("format_version") != FORMAT_VERSION:
            raise ConfigurationError(f"unsupported policy format {d.get('format_version')!r}")
        return cls(int(d["obs_dim"]), int(d["act_dim"]), tuple(d["hidden"]),
                   np.asarray(d["weights"], float), RunningStats.from_dict(d["normalizer"]),
                   dict(d.get("meta", {})))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True))

    @classmethod
    def load(cls, path) -> "PolicyParams":
        return cls.from_dict(json.loads(Path(path).read_text()))


def forward(layers: Sequence, z: np.ndarray) -> np.ndarray:
    h = z
    for W, b in layers[:-1]:
        h = np.tanh(W @ h + b)
    W, b = layers[-1]
    return np.clip(W @ h + b, -1.0, 1.0)


def policy_forward(params: PolicyParams, obs) -> np.ndarray:
    obs = np.asarray(obs, dtype=np.float64)
    if obs.shape != (params.obs_dim,):
        raise ConfigurationError(f"observation shape {obs.shape} != ({params.obs_dim},)")
    return forward(params.layers(), normalize(params.normalizer, obs))
