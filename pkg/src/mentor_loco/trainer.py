"""Augmented Random Search (top-b directions, return-std scaling, state
normalization) plus the environment rollout worker it drives."""

from __future__ import annotations

import csv
import math
import time
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

from .controller import PolicyParams, RunningStats, forward, normalize
from .env import EnvConfig, Episode
from .errors import ConfigurationError, SimulationDiverged
from .mentor import MentorParams
from .terrain import CourseSpec, Hurdle, sample_course

CURVE_COLUMNS = ("iter", "train_mean", "train_max", "train_min", "eval", "param_norm", "seconds")


@dataclass(frozen=True)
class ArsConfig:
    step_size: float = 0.02
    noise: float = 0.03
    directions: int = 16
    top_directions: int = 8
    rollouts_per_direction: int = 1
    iterations: int = 100
    seed: int = 0

    def __post_init__(self):
        if not self.step_size > 0 or not self.noise > 0:
            raise ConfigurationError("step_size and noise must be positive")
        if not 1 <= self.top_directions <= self.directions:
            raise ConfigurationError("need 1 <= top_directions <= directions")
        if self.rollouts_per_direction < 1:
            raise ConfigurationError("rollouts_per_direction must be >= 1")


class Rollout(NamedTuple):
    ret: float
    steps: int = 0
    stats: Optional[RunningStats] = None
    info: Optional[dict] = None


@dataclass
class IterationReport:
    iteration: int
    train_mean: float
    train_max: float
    train_min: float
    eval_return: float
    param_norm: float
    seconds: float
    steps: int = 0

    def row(self) -> list:
        return [self.iteration, self.train_mean, self.train_max, self.train_min,
                self.eval_return, self.param_norm, self.seconds]


def rollout_seed(seed: int, iteration: int, direction: int, rep: int = 0) -> list[int]:
    """Seed material for one perturbation's episodes.

    Both signs of a direction share it, so the antithetic pair sees the same
    course and noise.
    """
    return [int(seed), int(iteration), int(direction), int(rep)]


def _as_rollout(out) -> Rollout:
    return out if isinstance(out, Rollout) else Rollout(float(out))


def ars_iteration(
    theta: np.ndarray,
    config: ArsConfig,
    evaluate: Callable[[np.ndarray, list], object],
    iteration: int = 0,
    normalizer: Optional[RunningStats] = None,
    evaluate_final: Optional[Callable[[np.ndarray], float]] = None,
    map_fn: Callable = map,
):
    """One ARS update.

    ``evaluate(params, seed)`` returns a float or a :class:`Rollout`; it must
    be deterministic in its arguments. Returns ``(theta', report,
    normalizer')`` where the normalizer has absorbed the observation
    statistics gathered by every rollout of this iteration.
    """
    t0 = time.perf_counter()
    theta = np.asarray(theta, dtype=np.float64)
    rng = np.random.default_rng([int(config.seed), int(iteration), 0x5EED])
    deltas = rng.standard_normal((config.directions, theta.size))

    params, seeds = [], []
    for i in range(config.directions):
        for rep in range(config.rollouts_per_direction):
            s = rollout_seed(config.seed, iteration, i, rep)
            params += [theta + config.noise * deltas[i], theta - config.noise * deltas[i]]
            seeds += [s, s]
    outs = [_as_rollout(o) for o in map_fn(evaluate, params, seeds)]

    k = config.rollouts_per_direction
    rets = np.array([o.ret for o in outs]).reshape(config.directions, k, 2).mean(axis=1)
    r_plus, r_minus = rets[:, 0], rets[:, 1]
    if not np.all(np.isfinite(rets)):
        raise SimulationDiverged(iteration, "non-finite rollout return")

    b = config.top_directions
    # stable sort so ties keep direction order
    order = np.argsort(-np.maximum(r_plus, r_minus), kind="stable")[:b]
    used = np.concatenate([r_plus[order], r_minus[order]])
    sigma_r = max(float(used.std()), 1e-8)
    step = (config.step_size / (b * sigma_r)) * ((r_plus[order] - r_minus[order]) @ deltas[order])
    new_theta = theta + step

    if normalizer is not None:
        for o in outs:
            if o.stats is not None:
                normalizer = normalizer.merge(o.stats)

    eval_ret = float(evaluate_final(new_theta)) if evaluate_final is not None else float("nan")
    all_rets = np.array([o.ret for o in outs])
    report = IterationReport(
        iteration=iteration,
        train_mean=float(all_rets.mean()),
        train_max=float(all_rets.max()),
        train_min=float(all_rets.min()),
        eval_return=eval_ret,
        param_norm=float(np.linalg.norm(new_theta)),
        seconds=time.perf_counter() - t0,
        steps=int(sum(o.steps for o in outs)),
    )
    return new_theta, report, normalizer


# ---------------------------------------------------------------------------
# environment rollouts


@dataclass(frozen=True)
class EpisodeSettings:
    """How each training or evaluation episode draws its course."""

    gap_size_range: tuple = (0.9, 0.9)
    gap_x_range: tuple = (2.0, 2.0)
    dropout: float = 0.0
    hurdle: Optional[Hurdle] = None
    base_course: CourseSpec = field(default_factory=CourseSpec)

    def sample(self, rng: np.random.Generator) -> CourseSpec:
        return sample_course(rng, self.gap_size_range, self.gap_x_range, self.hurdle,
                             self.base_course)


def run_episode(policy: PolicyParams, env_config: EnvConfig, settings: EpisodeSettings,
                mentor: MentorParams, seed, weights: Optional[np.ndarray] = None,
                collect_stats: bool = False, record: bool = False):
    """Roll out one episode with a frozen normalizer. Returns (Rollout, Episode)."""
    rng = np.random.default_rng(seed)
    course = settings.sample(rng)
    cfg = replace(env_config, dropout=settings.dropout)
    ep = Episode(cfg, course, mentor, rng.integers(2**63), record=record)
    layers = policy.layers(policy.weights if weights is None else weights)
    norm = policy.normalizer
    stats = RunningStats.empty(policy.obs_dim) if collect_stats else None
    obs = ep.observation
    try:
        while not ep.done:
            if stats is not None:
                stats.push(obs)
            action = forward(layers, normalize(norm, obs))
            obs = ep.step(action).observation
    except SimulationDiverged:
        # an unstable perturbation scores as a fall at this point
        ep.done, ep.reason = True, "fall"
    info = {
        "reason": ep.reason,
        "steps": ep.t,
        "displacement": ep.com()[0] - ep.start_com[0],
        "gap_x": course.gap_x,
        "gap_size": course.gap_size,
        "crossed": bool(ep.com()[0] > course.gap_end and ep.reason != "fall"),
        "bonus_events": ep.bonus_events,
    }
    return Rollout(ep.total_reward, ep.t, stats, info), ep


@dataclass
class RolloutWorker:
    """Picklable ``evaluate(weights, seed)`` for :func:`ars_iteration`."""

    policy: PolicyParams
    env_config: EnvConfig
    settings: EpisodeSettings
    mentor: MentorParams
    collect_stats: bool = True

    def __call__(self, weights, seed) -> Rollout:
        out, _ = run_episode(self.policy, self.env_config, self.settings, self.mentor, seed,
                             weights=weights, collect_stats=self.collect_stats)
        return out


def evaluate_policy(policy: PolicyParams, env_config: EnvConfig, settings: EpisodeSettings,
                    mentor: MentorParams, episodes: int = 1, seed: int = 0,
                    record: bool = False):
    """Mean return over ``episodes`` evaluation episodes plus per-episode logs."""
    if episodes < 1:
        raise ConfigurationError("episodes must be >= 1")
    logs = []
    rets = []
    for i in range(episodes):
        out, ep = run_episode(policy, env_config, settings, mentor, [int(seed), 0xE7A1, i],
                              record=record)
        rets.append(out.ret)
        logs.append({"return": out.ret, **out.info, "records": ep.records})
    return float(np.mean(rets)), logs


def train(
    policy: PolicyParams,
    config: ArsConfig,
    make_worker: Callable[[PolicyParams, int], RolloutWorker],
    eval_fn: Optional[Callable[[PolicyParams], float]] = None,
    step_budget: Optional[int] = None,
    curve_path: Optional[Path] = None,
    map_fn: Callable = map,
    callback: Optional[Callable] = None,
    eval_every: int = 1,
):
    """Run ARS on ``policy``; ``make_worker(policy, steps_so_far)`` builds the
    rollout function for each iteration (so settings can follow a curriculum).

    Stops after ``config.iterations`` or once ``step_budget`` control steps
    are consumed. ``eval_fn`` runs every ``eval_every`` iterations and on the
    last scheduled one; other curve rows carry NaN. Returns
    ``(policy, reports, steps_used)``.
    """
    if eval_every < 1:
        raise ConfigurationError("eval_every must be >= 1")
    policy = policy.with_weights(policy.weights)
    reports: list[IterationReport] = []
    steps = 0
    writer = None
    fh = None
    if curve_path is not None:
        fh = open(curve_path, "w", newline="")
        writer = csv.writer(fh)
        writer.writerow(CURVE_COLUMNS)
    try:
        for it in range(config.iterations):
            if step_budget is not None and steps >= step_budget:
                break
            worker = make_worker(policy, steps)
            final = None
            if eval_fn is not None and ((it + 1) % eval_every == 0
                                        or it == config.iterations - 1):
                def final(w, _p=policy):
                    return eval_fn(_p.with_weights(w))
            theta, report, norm = ars_iteration(policy.weights, config, worker, it,
                                                policy.normalizer, final, map_fn)
            policy = PolicyParams(policy.obs_dim, policy.act_dim, policy.hidden, theta, norm,
                                  dict(policy.meta))
            steps += report.steps
            reports.append(report)
            if writer is not None:
                writer.writerow(report.row())
                fh.flush()
            if callback is not None:
                callback(report, policy)
    finally:
        if fh is not None:
            fh.close()
    return policy, reports, steps


def write_curve(reports: Sequence[IterationReport], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(CURVE_COLUMNS)
        for r in reports:
            w.writerow(r.row())
