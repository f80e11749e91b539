"""Three-stage mentor curriculum.

Stage 1 searches over random mentors on a fixed gap position with a growing
gap size. Stage 2 fixes the best mentor and randomizes the gap position with a
growing upper bound. Stage 3 anneals the probability of hiding the mentor's
goal observation from 0 to 1. Each stage trains a population independently
and carries only the best member (by evaluation on the stage's end-state
settings) to the next.
"""

from __future__ import annotations

import hashlib
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from .config import PipelineConfig, RunConfig, version_string
from .controller import PolicyParams
from .env import EnvConfig
from .errors import ConfigurationError
from .mentor import MentorParams, sample_mentor
from .terrain import Hurdle
from .trainer import (ArsConfig, EpisodeSettings, IterationReport, RolloutWorker,
                      evaluate_policy, train, write_curve)

log = logging.getLogger(__name__)

__all__ = ["CurriculumSchedule", "curriculum_value", "SettingSchedule", "StageConfig",
           "StageResult", "sample_mentor", "run_stage", "run_full_pipeline", "stage_configs"]


@dataclass(frozen=True)
class CurriculumSchedule:
    start: float
    end: float
    total_steps: int

    def value_at(self, step) -> float:
        if step < 0:
            raise ValueError("step must be >= 0")
        if self.total_steps <= 0 or step >= self.total_steps:
            return float(self.end)
        if step == 0:
            return float(self.start)
        frac = step / self.total_steps
        return float(self.start + (self.end - self.start) * frac)


def curriculum_value(schedule: CurriculumSchedule, step) -> float:
    return schedule.value_at(step)


@dataclass(frozen=True)
class SettingSchedule:
    """Sampling range of one episode setting as a function of training steps.

    kinds: ``fixed`` (always ``low``), ``uniform`` (U(low, high)),
    ``upper_curriculum`` (U(low, u) with u ramping low -> high) and
    ``curriculum`` (the value itself ramps low -> high).
    """

    kind: str
    low: float
    high: Optional[float] = None

    def __post_init__(self):
        if self.kind not in ("fixed", "uniform", "upper_curriculum", "curriculum"):
            raise ConfigurationError(f"unknown schedule kind {self.kind!r}")
        if self.kind != "fixed" and (self.high is None or self.high < self.low) \
                and self.kind != "curriculum":
            raise ConfigurationError(f"{self.kind} schedule needs low <= high")

    def range_at(self, step: int, total: int) -> tuple[float, float]:
        if self.kind == "fixed":
            return self.low, self.low
        if self.kind == "uniform":
            return self.low, self.high
        v = CurriculumSchedule(self.low, self.high, total).value_at(step)
        if self.kind == "upper_curriculum":
            return self.low, v
        return v, v

    def end_range(self, total: int) -> tuple[float, float]:
        return self.range_at(total, total)


def fixed(v: float) -> SettingSchedule:
    return SettingSchedule("fixed", v)


@dataclass(frozen=True)
class StageConfig:
    stage: int
    population: int
    step_budget: int
    gap_size: SettingSchedule
    gap_x: SettingSchedule
    dropout: SettingSchedule
    ars: ArsConfig = field(default_factory=ArsConfig)
    eval_episodes: int = 3
    eval_every: int = 10
    hurdle: Optional[Hurdle] = None
    mentor_ranges: Optional[tuple] = None

    def __post_init__(self):
        if self.stage not in (1, 2, 3):
            raise ConfigurationError(f"stage must be 1, 2 or 3, got {self.stage}")
        if self.population < 1:
            raise ConfigurationError("population must be >= 1")
        if self.step_budget < 0:
            raise ConfigurationError("step_budget must be >= 0")

    def settings_at(self, step: int, base_course) -> EpisodeSettings:
        p_lo, _ = self.dropout.range_at(step, self.step_budget)
        return EpisodeSettings(self.gap_size.range_at(step, self.step_budget),
                               self.gap_x.range_at(step, self.step_budget),
                               p_lo, self.hurdle, base_course)

    def eval_settings(self, base_course) -> EpisodeSettings:
        """End state of every curriculum in this stage."""
        return self.settings_at(self.step_budget, base_course)


@dataclass
class StageResult:
    stage: int
    best_policy: PolicyParams
    best_mentor: MentorParams
    best_member: int
    best_return: float
    member_returns: list
    member_curves: list  # per-member list of IterationReport

    def __post_init__(self):
        if self.member_returns and self.best_return != max(self.member_returns):
            raise AssertionError("best return must be the member maximum")


def stage_configs(cfg: PipelineConfig, ars: ArsConfig) -> tuple[StageConfig, StageConfig, StageConfig]:
    """The three stages with their fixed and curriculum settings."""
    hurdle = Hurdle(**cfg.hurdle) if cfg.hurdle else None
    gs_lo, gs_hi = cfg.gap_size_curriculum
    gx_lo, gx_hi = cfg.gap_x_curriculum
    pd_lo, pd_hi = cfg.dropout_curriculum
    common = dict(eval_episodes=cfg.eval_episodes, eval_every=cfg.eval_every, hurdle=hurdle)
    ars1, ars2, ars3 = (replace(ars, iterations=cfg.max_iterations[i]) for i in range(3))
    s1 = StageConfig(1, cfg.populations[0], cfg.step_budgets[0],
                     gap_size=SettingSchedule("upper_curriculum", gs_lo, gs_hi),
                     gap_x=fixed(cfg.stage1_gap_x), dropout=fixed(0.0), ars=ars1,
                     mentor_ranges=tuple(tuple(r) for r in cfg.mentor_ranges), **common)
    s2 = StageConfig(2, cfg.populations[1], cfg.step_budgets[1],
                     gap_size=fixed(gs_hi),
                     gap_x=SettingSchedule("upper_curriculum", gx_lo, gx_hi),
                     dropout=fixed(0.0), ars=ars2, **common)
    s3 = StageConfig(3, cfg.populations[2], cfg.step_budgets[2],
                     gap_size=fixed(gs_hi),
                     gap_x=SettingSchedule("uniform", gx_lo, gx_hi),
                     dropout=SettingSchedule("curriculum", pd_lo, pd_hi), ars=ars3, **common)
    return s1, s2, s3


# ---------------------------------------------------------------------------


@dataclass
class _MemberJob:
    stage: StageConfig
    env: EnvConfig
    base_course: object
    policy: PolicyParams
    mentor: MentorParams
    seed: int
    member: int
    out_dir: Optional[str]


def _member_seed(master_seed: int, stage: int, member: int) -> int:
    ss = np.random.SeedSequence([int(master_seed), int(stage), int(member)])
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def _train_member(job: _MemberJob):
    st = job.stage
    ars = replace(st.ars, seed=job.seed)
    eval_settings = st.eval_settings(job.base_course)

    def make_worker(policy, steps):
        return RolloutWorker(policy, job.env, st.settings_at(steps, job.base_course), job.mentor)

    def eval_fn(policy):
        return evaluate_policy(policy, job.env, eval_settings, job.mentor, 1, seed=job.seed)[0]

    curve = None
    if job.out_dir is not None:
        Path(job.out_dir).mkdir(parents=True, exist_ok=True)
        curve = Path(job.out_dir) / "curve.csv"
    policy, reports, steps = train(job.policy, ars, make_worker, step_budget=st.step_budget,
                                   eval_fn=eval_fn, eval_every=st.eval_every, curve_path=curve)
    ret, logs = evaluate_policy(policy, job.env, eval_settings, job.mentor, st.eval_episodes,
                                seed=job.seed)
    policy.meta.update({
        "stage": st.stage, "member": job.member, "mentor": job.mentor.to_dict(),
        "eval_return": ret, "train_steps": steps,
        "eval": {"dropout": eval_settings.dropout,
                 "gap_x": [l["gap_x"] for l in logs],
                 "gap_size": [l["gap_size"] for l in logs],
                 "returns": [l["return"] for l in logs]},
    })
    if job.out_dir is not None:
        _save(policy, Path(job.out_dir) / "policy.json")
    return policy, ret, reports


def _save(policy: PolicyParams, path: Path) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    policy.save(path)


def run_stage(stage: StageConfig, env: EnvConfig, warm_start: Optional[PolicyParams] = None,
              mentor: Optional[MentorParams] = None, master_seed: int = 0,
              out_dir=None, base_course=None, workers: int = 1) -> StageResult:
    """Train the stage population and pick the best member."""
    from .terrain import CourseSpec

    base_course = base_course or CourseSpec()
    if stage.stage > 1 and (warm_start is None or mentor is None):
        raise ConfigurationError(f"stage {stage.stage} needs a warm-start policy and a fixed mentor")
    if warm_start is None:
        rng = np.random.default_rng([int(master_seed), 0xB0])
        warm_start = PolicyParams.initial(env.layout.dim, rng,
                                          meta={"ray_count": env.lidar.ray_count})
    if warm_start.obs_dim != env.layout.dim:
        raise ConfigurationError("warm-start policy does not match the observation layout")
    # every member starts from the same bytes
    start_blob = json.dumps(warm_start.to_dict(), sort_keys=True)

    jobs = []
    for i in range(stage.population):
        if stage.stage == 1:
            ranges = stage.mentor_ranges or DEFAULT_MENTOR_RANGES
            m = sample_mentor(np.random.default_rng([int(master_seed), 1, i, 0x3E]), ranges)
        else:
            m = mentor
        pol = PolicyParams.from_dict(json.loads(start_blob))
        d = None if out_dir is None else str(Path(out_dir) / f"member_{i}")
        jobs.append(_MemberJob(stage, env, base_course, pol, m,
                               _member_seed(master_seed, stage.stage, i), i, d))

    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_train_member, jobs))
    else:
        results = [_train_member(j) for j in jobs]

    returns = [r[1] for r in results]
    best = int(np.argmax(returns))
    best_policy = results[best][0]
    best_mentor = jobs[best].mentor
    best_policy.meta.update({"best_member": best, "member_returns": returns})
    if out_dir is not None:
        _save(best_policy, Path(out_dir) / "best.json")
    log.info("stage %d: best member %d, return %.3f", stage.stage, best, returns[best])
    return StageResult(stage.stage, best_policy, best_mentor, best, returns[best], returns,
                       [r[2] for r in results])


DEFAULT_MENTOR_RANGES = ((0.0, 1.5), (-0.5, 0.5), (0.0, 1.5), (-0.5, 0.5), (0.1, 0.5))


def artifact_hash(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def run_full_pipeline(config: RunConfig, out_dir, workers: Optional[int] = None,
                      stages=(1, 2, 3), warm_start: Optional[PolicyParams] = None,
                      mentor: Optional[MentorParams] = None):
    """Stage 1 -> 2 -> 3 with best-carrying; everything is written under ``out_dir``.

    Returns ``(final_policy, [StageResult, ...])``.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(config.to_json())
    env = config.env_config()
    base_course = config.terrain
    seed = config.pipeline.master_seed
    workers = workers if workers is not None else config.pipeline.workers
    all_stages = stage_configs(config.pipeline, config.ars)
    results = []
    policy, best_mentor = warm_start, mentor
    if policy is None:
        rng = np.random.default_rng([int(seed), 0xB0])
        policy = PolicyParams.initial(env.layout.dim, rng, hidden=config.hidden,
                                      meta={"ray_count": env.lidar.ray_count})
    for st in all_stages:
        if st.stage not in stages:
            continue
        res = run_stage(st, env, policy, best_mentor, seed, out / f"stage{st.stage}",
                        base_course, workers)
        results.append(res)
        policy, best_mentor = res.best_policy, res.best_mentor
        policy.meta.update({"master_seed": seed, "version": version_string()})
        _save(policy, out / f"stage{st.stage}" / "best.json")
    final = policy
    _save(final, out / "final" / "policy.json")
    summary = {
        "master_seed": seed,
        "version": version_string(),
        "stages": [{"stage": r.stage, "best_member": r.best_member, "best_return": r.best_return,
                    "member_returns": r.member_returns, "mentor": r.best_mentor.to_dict()}
                   for r in results],
        "final_sha256": artifact_hash(out / "final" / "policy.json"),
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
    return final, results
