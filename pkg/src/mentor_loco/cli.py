"""Command line: train, eval, analyze, course, selftest.

Exit codes: 0 success, 1 configuration or usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .analysis import EpisodeLog, analyze_log, write_jsonl
from .config import RunConfig, preset, version_string
from .controller import PolicyParams
from .errors import ConfigurationError
from .mentor import MentorParams
from .terrain import CourseSpec, Hurdle, height_at

log = logging.getLogger("mentor_loco")

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _load_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else preset(args.preset)
    if getattr(args, "seed", None) is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _mentor(args, policy: PolicyParams | None) -> MentorParams:
    if getattr(args, "mentor", None):
        return MentorParams.from_sequence(args.mentor)
    if policy is not None and "mentor" in policy.meta:
        return MentorParams(**policy.meta["mentor"])
    return MentorParams()


def cmd_train(args) -> int:
    from .pipeline import run_full_pipeline

    cfg = _load_config(args)
    stages = (1, 2, 3) if args.stage is None else (args.stage,)
    warm = PolicyParams.load(args.warm_start) if args.warm_start else None
    mentor = _mentor(args, warm) if (warm is not None or args.mentor) else None
    final, results = run_full_pipeline(cfg, args.out, workers=args.workers, stages=stages,
                                       warm_start=warm, mentor=mentor)
    for r in results:
        print(f"stage {r.stage}: best member {r.best_member} return {r.best_return:.4f} "
              f"mentor {r.best_mentor.as_tuple()}")
    print(f"final policy: {Path(args.out) / 'final' / 'policy.json'}")
    return EXIT_OK


def cmd_eval(args) -> int:
    from .trainer import EpisodeSettings, evaluate_policy

    cfg = _load_config(args)
    policy = PolicyParams.load(args.policy)
    env = cfg.env_config()
    if policy.obs_dim != env.layout.dim:
        raise ConfigurationError(
            f"policy expects {policy.obs_dim} observations, config gives {env.layout.dim}")
    hurdle = Hurdle(height=args.hurdle) if args.hurdle is not None else None
    settings = EpisodeSettings(tuple(args.gap_size), tuple(args.gap_x), args.dropout, hurdle,
                               cfg.terrain)
    mentor = _mentor(args, policy)
    mean, logs = evaluate_policy(policy, env, settings, mentor, args.episodes, seed=args.seed,
                                 record=True)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    episodes = []
    for i, ep in enumerate(logs):
        write_jsonl(ep.pop("records"), out / f"episode_{i}.jsonl")
        episodes.append(ep)
    summary = {"mean_return": mean, "episodes": episodes, "mentor": mentor.to_dict(),
               "seed": args.seed, "dropout": args.dropout, "version": version_string()}
    (out / "summary.json").write_text(json.dumps(summary, indent=2, default=float))
    crossed = sum(e["crossed"] for e in episodes)
    print(f"mean return {mean:.4f} over {len(episodes)} episodes, crossed {crossed}")
    return EXIT_OK


def cmd_analyze(args) -> int:
    cfg = _load_config(args)
    ep = EpisodeLog.load(args.log)
    out = Path(args.out) if args.out else Path(args.log).with_suffix("")
    mass = args.mass if args.mass is not None else cfg.robot.total_mass
    summary = analyze_log(ep, out, mass, cfg.robot.motors_per_joint, args.convention,
                          args.window, cfg.motor)
    flag = "feasible" if summary["torque_feasible"] else "INFEASIBLE"
    print(f"peak torque {summary['peak_torque']:.3f} N*m vs limit "
          f"{summary['torque_limit']:.1f}: {flag}")
    print(f"flight phases: {summary['flight_phases']}")
    print(f"mean CoT: {summary['mean_cot']}  (csv written to {out})")
    return EXIT_OK


def cmd_course(args) -> int:
    if args.spec:
        try:
            spec = CourseSpec.from_json(Path(args.spec).read_text())
        except OSError as e:
            raise ConfigurationError(f"cannot read course spec: {e}") from e
        except (TypeError, json.JSONDecodeError) as e:
            raise ConfigurationError(f"bad course spec: {e}") from e
    else:
        spec = CourseSpec()
    print(f"gap: [{spec.gap_x:g}, {spec.gap_end:g}] depth {spec.gap_depth:g}")
    if spec.hurdle is not None:
        print(f"hurdle: height {spec.hurdle.height:g} width {spec.hurdle.width:g}")
    print(f"goal: x = {spec.goal_x:g}")
    for x in np.arange(0.0, spec.track_length + 1e-9, args.step):
        print(f"{x:8.3f} {float(height_at(x, spec)):8.3f}")
    return EXIT_OK


def cmd_selftest(args) -> int:
    import pytest

    tests = Path(__file__).resolve().parents[2] / "tests"
    if not tests.is_dir():
        print(f"test suite not found at {tests}", file=sys.stderr)
        return EXIT_RUNTIME
    argv = [str(tests), "-q", "-m", "not slow"]
    if args.all:
        argv = [str(tests), "-q"]
    return EXIT_OK if pytest.main(argv) == 0 else EXIT_RUNTIME


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mentor-loco", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def with_config(sp):
        sp.add_argument("--config", help="JSON run config")
        sp.add_argument("--preset", default="desk", choices=("full", "desk", "smoke"))

    t = sub.add_parser("train", help="run the pipeline or one stage")
    with_config(t)
    t.add_argument("--stage", type=int, choices=(1, 2, 3))
    t.add_argument("--seed", type=int, help="master seed")
    t.add_argument("--out", required=True)
    t.add_argument("--warm-start", help="policy.json to start from (needed for stage 2/3)")
    t.add_argument("--mentor", type=float, nargs=5, metavar="M")
    t.add_argument("--workers", type=int)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="evaluate a policy and write episode logs")
    with_config(e)
    e.add_argument("--policy", required=True)
    e.add_argument("--episodes", type=int, default=1)
    e.add_argument("--gap-x", type=float, nargs="+", default=[2.0],
                   help="fixed value or LO HI range")
    e.add_argument("--gap-size", type=float, nargs="+", default=[0.9])
    e.add_argument("--hurdle", type=float, help="hurdle height in the gap, m")
    e.add_argument("--dropout", type=float, default=0.0)
    e.add_argument("--mentor", type=float, nargs=5, metavar="M")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--out", default="eval_out")
    e.set_defaults(func=cmd_eval)

    a = sub.add_parser("analyze", help="CoT, torque and flight phases from a log")
    with_config(a)
    a.add_argument("--log", required=True)
    a.add_argument("--out")
    a.add_argument("--mass", type=float)
    a.add_argument("--convention", choices=("positive", "signed"), default="positive")
    a.add_argument("--window", type=int, default=1)
    a.set_defaults(func=cmd_analyze)

    c = sub.add_parser("course", help="print a terrain profile")
    c.add_argument("--spec", help="CourseSpec JSON")
    c.add_argument("--step", type=float, default=0.1)
    c.set_defaults(func=cmd_course)

    s = sub.add_parser("selftest", help="run the test suite (fast tests by default)")
    s.add_argument("--all", action="store_true")
    s.set_defaults(func=cmd_selftest)
    return p


def _range(v, name):
    if len(v) == 1:
        return (v[0], v[0])
    if len(v) == 2:
        return (v[0], v[1])
    raise ConfigurationError(f"--{name} takes one value or a LO HI pair")


def cli_main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as e:  # --help
        return int(e.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "eval":
            args.gap_x = _range(args.gap_x, "gap-x")
            args.gap_size = _range(args.gap_size, "gap-size")
        if getattr(args, "step", 1.0) <= 0:
            raise ConfigurationError("--step must be positive")
        return args.func(args)
    except ConfigurationError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as e:  # noqa: BLE001 - top-level reporting
        print(f"runtime failure: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME


def main() -> None:
    sys.exit(cli_main())
