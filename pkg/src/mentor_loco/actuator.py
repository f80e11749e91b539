"""DC actuator with torque-constant rolloff, driven by a 1 kHz PD loop.

The torque/speed envelope is flat up to the rated speed and falls linearly to
zero at the zero-torque speed. The limit applies in the motoring quadrant only
(torque and speed of the same sign); when braking the motor can always deliver
the peak torque.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import ConfigurationError

ACTUATOR_SUBSTEPS = 10
SUBSTEP_DT = 1e-4


@dataclass(frozen=True)
class MotorSpec:
    peak_torque: float = 12.0
    rated_speed: float = 38.2
    zero_torque_speed: float = 44.5
    peak_power: float = 458.0  # informational

    def __post_init__(self):
        if not self.peak_torque > 0:
            raise ConfigurationError("peak_torque must be positive")
        if not 0 < self.rated_speed < self.zero_torque_speed:
            raise ConfigurationError("need 0 < rated_speed < zero_torque_speed")


@dataclass(frozen=True)
class PDGains:
    kp: float = 100.0
    kd: float = 2.0

    def __post_init__(self):
        if not self.kp > 0 or self.kd < 0:
            raise ConfigurationError(f"invalid PD gains kp={self.kp} kd={self.kd}")


@njit(cache=True)
def _available(speed, t_max, w_rated, w_zero):
    w = abs(speed)
    if w <= w_rated:
        return t_max
    if w >= w_zero:
        return 0.0
    return t_max * (w_zero - w) / (w_zero - w_rated)


@njit(cache=True)
def _clamp(cmd, speed, t_max, w_rated, w_zero):
    # motoring quadrant uses the rolloff, braking gets the full peak torque
    if cmd * speed > 0.0:
        lim = _available(speed, t_max, w_rated, w_zero)
    else:
        lim = t_max
    if cmd > lim:
        return lim
    if cmd < -lim:
        return -lim
    return cmd


@njit(cache=True)
def _actuator(cmd, speed, accel, n_sub, dt_sub, t_max, w_rated, w_zero):
    acc = 0.0
    for k in range(n_sub):
        w = speed + accel * k * dt_sub
        acc += _clamp(cmd, w, t_max, w_rated, w_zero)
    return acc / n_sub


def available_torque(speed: float, spec: MotorSpec = MotorSpec()) -> float:
    """Peak deliverable torque magnitude at joint speed ``speed`` (rad/s)."""
    return float(_available(float(speed), spec.peak_torque, spec.rated_speed,
                            spec.zero_torque_speed))


def clamp_torque(command: float, speed: float, spec: MotorSpec = MotorSpec()) -> float:
    return float(_clamp(float(command), float(speed), spec.peak_torque,
                        spec.rated_speed, spec.zero_torque_speed))


def pd_torque(q_des: float, q: float, qd: float, gains: PDGains = PDGains()) -> float:
    return gains.kp * (q_des - q) - gains.kd * qd


def actuator_step(
    q_des: float,
    q: float,
    qd: float,
    spec: MotorSpec = MotorSpec(),
    gains: PDGains = PDGains(),
    accel: float = 0.0,
) -> float:
    """Effective joint torque over one 1 ms physics step.

    The PD command is evaluated once and held; the actuator is sampled at ten
    100 us sub-steps, each clamped at the speed extrapolated with ``accel``
    (zero by default, i.e. speed held constant), and the clamped torques are
    averaged.
    """
    cmd = pd_torque(q_des, q, qd, gains)
    return float(_actuator(cmd, float(qd), float(accel), ACTUATOR_SUBSTEPS, SUBSTEP_DT,
                           spec.peak_torque, spec.rated_speed, spec.zero_torque_speed))


def torque_speed_curve(spec: MotorSpec = MotorSpec(), n: int = 200):
    """Sampled motoring envelope, handy for plotting."""
    w = np.linspace(0.0, 1.1 * spec.zero_torque_speed, n)
    return w, np.array([available_torque(x, spec) for x in w])
