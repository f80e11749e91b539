"""Single JSON run configuration with sections robot, actuator, terrain, env,
controller, ars and pipeline, plus named presets."""

from __future__ import annotations

import json
import subprocess
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

from .actuator import MotorSpec, PDGains
from .controller import TrajectoryGenerator
from .env import EnvConfig
from .errors import ConfigurationError
from .physics import ContactParams, RobotModel
from .sensors import LidarSpec
from .terrain import CourseSpec
from .trainer import ArsConfig

__version__ = "0.1.0"

SECTIONS = ("robot", "actuator", "terrain", "env", "controller", "ars", "pipeline")
_ENV_SCALARS = ("action_repeat", "horizon", "goal_bonus", "dropout", "min_height", "max_pitch",
                "goal_radius", "walking_height", "init_jitter")


def version_string() -> str:
    """``git describe`` of the source tree when available, else the package version."""
    try:
        out = subprocess.run(["git", "describe", "--tags", "--always", "--dirty"],
                             cwd=Path(__file__).parent, capture_output=True, text=True,
                             timeout=5)
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+g{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


@dataclass(frozen=True)
class PipelineConfig:
    populations: tuple = (90, 30, 30)
    step_budgets: tuple = (2_000_000, 2_000_000, 2_000_000)  # control steps per member
    max_iterations: tuple = (1000, 1000, 1000)
    eval_episodes: int = 3
    eval_every: int = 10
    gap_size_curriculum: tuple = (0.3, 0.9)
    stage1_gap_x: float = 2.0
    gap_x_curriculum: tuple = (2.0, 3.0)
    dropout_curriculum: tuple = (0.0, 1.0)
    mentor_ranges: tuple = ((0.0, 1.5), (-0.5, 0.5), (0.0, 1.5), (-0.5, 0.5), (0.1, 0.5))
    hurdle: Optional[dict] = None
    master_seed: int = 0
    workers: int = 1

    def __post_init__(self):
        for name in ("populations", "step_budgets", "max_iterations"):
            v = tuple(int(x) for x in getattr(self, name))
            if len(v) != 3:
                raise ConfigurationError(f"pipeline.{name} needs three entries")
            object.__setattr__(self, name, v)
        for name in ("gap_size_curriculum", "gap_x_curriculum", "dropout_curriculum"):
            v = tuple(float(x) for x in getattr(self, name))
            if len(v) != 2 or v[0] > v[1]:
                raise ConfigurationError(f"pipeline.{name} must be (start, end) with start <= end")
            object.__setattr__(self, name, v)
        object.__setattr__(self, "mentor_ranges",
                           tuple(tuple(float(a) for a in r) for r in self.mentor_ranges))
        if len(self.mentor_ranges) != 5:
            raise ConfigurationError("pipeline.mentor_ranges needs five (lo, hi) pairs")
        if min(self.populations) < 1 or self.workers < 1 or self.eval_episodes < 1:
            raise ConfigurationError("populations, workers and eval_episodes must be >= 1")
        if not (0.0 <= self.dropout_curriculum[0] and self.dropout_curriculum[1] <= 1.0):
            raise ConfigurationError("dropout curriculum must stay within [0, 1]")


def _build(cls, d: dict, section: str):
    if not isinstance(d, dict):
        raise ConfigurationError(f"section {section!r} must be an object")
    known = {f.name for f in fields(cls)}
    unknown = set(d) - known
    if unknown:
        raise ConfigurationError(f"unknown keys in {section}: {sorted(unknown)}")
    try:
        return cls(**d)
    except TypeError as e:
        raise ConfigurationError(f"bad {section} section: {e}") from e


@dataclass(frozen=True)
class RunConfig:
    robot: RobotModel = field(default_factory=RobotModel)
    contact: ContactParams = field(default_factory=ContactParams)
    motor: MotorSpec = field(default_factory=MotorSpec)
    gains: PDGains = field(default_factory=PDGains)
    terrain: CourseSpec = field(default_factory=CourseSpec)
    env: dict = field(default_factory=dict)  # scalar EnvConfig overrides
    lidar: LidarSpec = field(default_factory=LidarSpec)
    tg: TrajectoryGenerator = field(default_factory=TrajectoryGenerator)
    hidden: tuple = (32, 32)
    ars: ArsConfig = field(default_factory=ArsConfig)
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)

    def __post_init__(self):
        bad = set(self.env) - set(_ENV_SCALARS)
        if bad:
            raise ConfigurationError(f"unknown keys in env: {sorted(bad)}")
        self.env_config()  # validate early

    def env_config(self) -> EnvConfig:
        return EnvConfig(model=self.robot, motor=self.motor, gains=self.gains,
                         contact=self.contact, lidar=self.lidar, tg=self.tg, **self.env)

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        robot = asdict(self.robot)
        robot["contact"] = asdict(self.contact)
        tg = asdict(self.tg)
        tg["leg_offsets"] = list(tg["leg_offsets"])
        return {
            "robot": robot,
            "actuator": {"motor": asdict(self.motor), "gains": asdict(self.gains)},
            "terrain": self.terrain.to_dict(),
            "env": {**self.env, "lidar": asdict(self.lidar)},
            "controller": {"tg": tg, "hidden": list(self.hidden)},
            "ars": asdict(self.ars),
            "pipeline": asdict(self.pipeline),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        if not isinstance(d, dict):
            raise ConfigurationError("config must be a JSON object")
        unknown = set(d) - set(SECTIONS)
        if unknown:
            raise ConfigurationError(f"unknown config sections: {sorted(unknown)}")
        kw = {}
        if "robot" in d:
            robot = dict(d["robot"])
            if "contact" in robot:
                kw["contact"] = _build(ContactParams, robot.pop("contact"), "robot.contact")
            kw["robot"] = _build(RobotModel, robot, "robot")
        if "actuator" in d:
            act = dict(d["actuator"])
            extra = set(act) - {"motor", "gains"}
            if extra:
                raise ConfigurationError(f"unknown keys in actuator: {sorted(extra)}")
            if "motor" in act:
                kw["motor"] = _build(MotorSpec, act["motor"], "actuator.motor")
            if "gains" in act:
                kw["gains"] = _build(PDGains, act["gains"], "actuator.gains")
        if "terrain" in d:
            try:
                kw["terrain"] = CourseSpec.from_dict(d["terrain"])
            except TypeError as e:
                raise ConfigurationError(f"bad terrain section: {e}") from e
        if "env" in d:
            env = dict(d["env"])
            if "lidar" in env:
                kw["lidar"] = _build(LidarSpec, env.pop("lidar"), "env.lidar")
            kw["env"] = env
        if "controller" in d:
            ctl = dict(d["controller"])
            extra = set(ctl) - {"tg", "hidden"}
            if extra:
                raise ConfigurationError(f"unknown keys in controller: {sorted(extra)}")
            if "tg" in ctl:
                tg = dict(ctl["tg"])
                if "leg_offsets" in tg:
                    tg["leg_offsets"] = tuple(tg["leg_offsets"])
                kw["tg"] = _build(TrajectoryGenerator, tg, "controller.tg")
            if "hidden" in ctl:
                kw["hidden"] = tuple(int(h) for h in ctl["hidden"])
        if "ars" in d:
            kw["ars"] = _build(ArsConfig, d["ars"], "ars")
        if "pipeline" in d:
            kw["pipeline"] = _build(PipelineConfig, d["pipeline"], "pipeline")
        return cls(**kw)

    @classmethod
    def from_json(cls, text: str) -> "RunConfig":
        try:
            d = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"config is not valid JSON: {e}") from e
        return cls.from_dict(d)

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            text = Path(path).read_text()
        except OSError as e:
            raise ConfigurationError(f"cannot read config {path}: {e}") from e
        return cls.from_json(text)

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(self, pipeline=replace(self.pipeline, master_seed=int(seed)))


def preset(name: str) -> RunConfig:
    """``full`` (full populations), ``desk`` (populations 8/4/4, laptop
    budgets) or ``smoke`` (desk populations, budgets of a few iterations)."""
    if name == "full":
        return RunConfig()
    if name == "desk":
        return RunConfig(
            env={"horizon": 400},
            ars=ArsConfig(directions=8, top_directions=4),
            pipeline=PipelineConfig(populations=(8, 4, 4),
                                    step_budgets=(200_000, 100_000, 100_000),
                                    max_iterations=(300, 300, 300)))
    if name == "smoke":
        return RunConfig(
            env={"horizon": 50},
            ars=ArsConfig(directions=2, top_directions=1),
            pipeline=PipelineConfig(populations=(8, 4, 4), step_budgets=(400, 400, 400),
                                    max_iterations=(2, 2, 2), eval_episodes=2, eval_every=1))
    raise ConfigurationError(f"unknown preset {name!r} (full, desk, smoke)")
