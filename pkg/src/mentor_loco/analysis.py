"""Gait analysis on recorded episodes: cost of transport, flight phases and
torque feasibility.

Logs are JSON lines, one control step per line, as written by
``Episode(record=True)``: ``t, com, com_vel, pitch, feet, contacts, q, qd,
tau, power, reward, event``. Torques are per motor.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .actuator import MotorSpec
from .errors import ConfigurationError
from .physics import GRAVITY

SAMPLE_DT = 0.01
VELOCITY_FLOOR = 0.05  # m/s, CoT is left undefined below this


@dataclass
class EpisodeLog:
    t: np.ndarray
    com: np.ndarray  # (n, 2)
    com_vel: np.ndarray  # (n, 2)
    pitch: np.ndarray
    contacts: np.ndarray  # (n, 2) bool
    q: np.ndarray  # (n, 4)
    qd: np.ndarray  # (n, 4)
    tau: np.ndarray  # (n, 4) per-motor torque
    power: np.ndarray
    reward: np.ndarray
    events: list
    feet: Optional[np.ndarray] = None

    def __post_init__(self):
        n = len(self.t)
        if n and np.any(np.abs(np.diff(self.t) - SAMPLE_DT) > 1e-6):
            raise ConfigurationError("log times must be strictly increasing at 0.01 s spacing")
        for name in ("com", "com_vel", "pitch", "contacts", "q", "qd", "tau", "power", "reward"):
            if len(getattr(self, name)) != n:
                raise ConfigurationError(f"log field {name!r} has the wrong length")

    def __len__(self) -> int:
        return len(self.t)

    @classmethod
    def from_records(cls, records) -> "EpisodeLog":
        records = list(records)
        if not records:
            raise ConfigurationError("empty log")

        def col(key, default=None, dtype=float):
            try:
                return np.array([r[key] if default is None else r.get(key, default)
                                 for r in records], dtype=dtype)
            except KeyError as e:
                raise ConfigurationError(f"log record missing field {e}") from e

        n_zero = [0.0] * 4
        tau = col("tau", n_zero)
        qd = col("qd", n_zero)
        return cls(
            t=col("t"),
            com=col("com"),
            com_vel=col("com_vel"),
            pitch=col("pitch", 0.0),
            contacts=col("contacts", dtype=bool),
            q=col("q", n_zero),
            qd=qd,
            tau=tau,
            power=col("power", 0.0),
            reward=col("reward", 0.0),
            events=[r.get("event") for r in records],
            feet=col("feet") if all("feet" in r for r in records) else None,
        )

    @classmethod
    def load(cls, path) -> "EpisodeLog":
        try:
            lines = Path(path).read_text().splitlines()
        except OSError as e:
            raise ConfigurationError(f"cannot read log {path}: {e}") from e
        try:
            return cls.from_records(json.loads(l) for l in lines if l.strip())
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"log {path} is not JSON lines: {e}") from e

    def save(self, path) -> None:
        with open(path, "w") as fh:
            for r in self.to_records():
                fh.write(json.dumps(r) + "\n")

    def to_records(self) -> list[dict]:
        out = []
        for i in range(len(self)):
            r = {"t": float(self.t[i]), "com": self.com[i].tolist(),
                 "com_vel": self.com_vel[i].tolist(), "pitch": float(self.pitch[i]),
                 "contacts": self.contacts[i].tolist(), "q": self.q[i].tolist(),
                 "qd": self.qd[i].tolist(), "tau": self.tau[i].tolist(),
                 "power": float(self.power[i]), "reward": float(self.reward[i]),
                 "event": self.events[i]}
            if self.feet is not None:
                r["feet"] = self.feet[i].tolist()
            out.append(r)
        return out


def write_jsonl(records, path) -> None:
    with open(path, "w") as fh:
        for r in records:
            fh.write(json.dumps(r) + "\n")


def joint_power(log: EpisodeLog, motors_per_joint: int = 2,
                convention: str = "positive") -> np.ndarray:
    """Mechanical power summed over joints, from per-motor torque and joint speed.

    ``positive`` counts only motoring power (no credit for regeneration);
    ``signed`` sums tau * qdot as is.
    """
    p = log.tau * log.qd
    if convention == "positive":
        p = np.maximum(p, 0.0)
    elif convention != "signed":
        raise ConfigurationError(f"unknown power convention {convention!r}")
    return motors_per_joint * p.sum(axis=1)


def _trailing_mean(x: np.ndarray, window: int) -> np.ndarray:
    if window == 1:
        return x.astype(float)
    c = np.concatenate(([0.0], np.cumsum(x, dtype=float)))
    idx = np.arange(1, len(x) + 1)
    lo = np.maximum(idx - window, 0)
    return (c[idx] - c[lo]) / (idx - lo)


def cost_of_transport(log: EpisodeLog, mass: float, window: int = 1,
                      motors_per_joint: int = 2, convention: str = "positive",
                      velocity_floor: float = VELOCITY_FLOOR) -> np.ndarray:
    """CoT(t) = P / (m g v); NaN where the forward speed is below the floor.

    ``window`` averages power and speed over that many trailing samples first.
    """
    if not mass > 0:
        raise ConfigurationError("mass must be positive")
    if window < 1:
        raise ConfigurationError("window must be >= 1")
    p = _trailing_mean(joint_power(log, motors_per_joint, convention), window)
    v = _trailing_mean(log.com_vel[:, 0], window)
    cot = np.full(len(log), np.nan)
    ok = v >= velocity_floor
    cot[ok] = p[ok] / (mass * GRAVITY * v[ok])
    return cot


def flight_phases(log: EpisodeLog) -> list[tuple[float, float]]:
    """Maximal runs of samples with every foot off the ground, as (first t, last t)."""
    air = ~log.contacts.any(axis=1)
    out = []
    i, n = 0, len(air)
    while i < n:
        if air[i]:
            j = i
            while j + 1 < n and air[j + 1]:
                j += 1
            out.append((float(log.t[i]), float(log.t[j])))
            i = j + 1
        else:
            i += 1
    return out


def peak_torque(log: EpisodeLog) -> float:
    return float(np.abs(log.tau).max()) if len(log) else 0.0


def torque_feasible(log: EpisodeLog, spec: MotorSpec = MotorSpec()) -> bool:
    return peak_torque(log) <= spec.peak_torque + 1e-9


def analyze_log(log: EpisodeLog, out_dir, mass: float, motors_per_joint: int = 2,
                convention: str = "positive", window: int = 1,
                spec: MotorSpec = MotorSpec()) -> dict:
    """Write cot.csv, torque.csv and flight.csv under ``out_dir``; return a summary."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    power = joint_power(log, motors_per_joint, convention)
    cot = cost_of_transport(log, mass, window, motors_per_joint, convention)
    with open(out / "cot.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "power", "velocity", "cot"])
        for i in range(len(log)):
            w.writerow([log.t[i], power[i], log.com_vel[i, 0],
                        "" if math.isnan(cot[i]) else cot[i]])
    with open(out / "torque.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "front_hip", "front_knee", "rear_hip", "rear_knee"])
        for i in range(len(log)):
            w.writerow([log.t[i], *log.tau[i]])
    phases = flight_phases(log)
    with open(out / "flight.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t_start", "t_end"])
        w.writerows(phases)
    valid = cot[~np.isnan(cot)]
    peak = peak_torque(log)
    summary = {
        "samples": len(log),
        "peak_torque": peak,
        "torque_limit": spec.peak_torque,
        "torque_feasible": bool(peak <= spec.peak_torque + 1e-9),
        "peak_power": float(power.max()) if len(power) else 0.0,
        "mean_cot": float(valid.mean()) if valid.size else None,
        "cot_samples": int(valid.size),
        "flight_phases": [list(p) for p in phases],
        "convention": convention,
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2))
    return summary
