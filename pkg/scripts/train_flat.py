"""Desk-scale ARS on a flat course (no gap): the training smoke experiment.

    python3 scripts/train_flat.py --out runs/flat --iterations 150

Writes the trained policy, the learning curve, and a recorded evaluation
episode that ``mentor-loco analyze`` can read.
"""

import argparse
import json
import time
from pathlib import Path

import numpy as np

from mentor_loco.analysis import write_jsonl
from mentor_loco.controller import PolicyParams
from mentor_loco.env import EnvConfig
from mentor_loco.mentor import MentorParams
from mentor_loco.trainer import ArsConfig, EpisodeSettings, RolloutWorker, evaluate_policy, train


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs/flat")
    ap.add_argument("--iterations", type=int, default=150)
    ap.add_argument("--horizon", type=int, default=300)
    ap.add_argument("--directions", type=int, default=8)
    ap.add_argument("--top", type=int, default=4)
    ap.add_argument("--step-size", type=float, default=0.02)
    ap.add_argument("--noise", type=float, default=0.03)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    env = EnvConfig(horizon=args.horizon)
    flat = EpisodeSettings(gap_size_range=(0.0, 0.0))
    mentor = MentorParams()
    policy = PolicyParams.initial(env.layout.dim, np.random.default_rng(0))
    cfg = ArsConfig(step_size=args.step_size, noise=args.noise, directions=args.directions,
                    top_directions=args.top, iterations=args.iterations, seed=args.seed)

    def displacement(p):
        _, logs = evaluate_policy(p, env, flat, mentor, episodes=3, seed=123)
        return float(np.mean([l["displacement"] for l in logs]))

    d0 = displacement(policy)
    print(f"initial displacement {d0:.3f} m")
    t0 = time.perf_counter()

    def progress(rep, p):
        if rep.iteration % 10 == 0:
            print(f"iter {rep.iteration:4d}  train mean {rep.train_mean:7.3f}  "
                  f"max {rep.train_max:7.3f}  {time.perf_counter() - t0:6.1f} s", flush=True)

    policy, reports, steps = train(policy, cfg, lambda p, s: RolloutWorker(p, env, flat, mentor),
                                   curve_path=out / "curve.csv", callback=progress)
    d1 = displacement(policy)
    policy.save(out / "policy.json")
    _, logs = evaluate_policy(policy, env, flat, mentor, episodes=1, seed=123, record=True)
    write_jsonl(logs[0].pop("records"), out / "episode.jsonl")
    summary = {"initial_displacement": d0, "final_displacement": d1, "ratio": d1 / d0,
               "iterations": len(reports), "control_steps": steps,
               "seconds": time.perf_counter() - t0}
    (out / "summary.json").write_text(json.dumps(summary, indent=2))
    print(json.dumps(summary, indent=2))


if __name__ == "__main__":
    main()
