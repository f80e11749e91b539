"""Stage 1 at the easy end of the curriculum: does any mentor teach a gap crossing?

Fixed gap at x = 2.0 m with size 0.3 m, ten sampled mentors, one ARS run per
mentor within a wall-clock budget of about an hour on one core. Reports the
gap-crossing success rate of the best member (and of every member). A zero
rate is an acceptable outcome; the number is recorded, not required.

    python3 scripts/stretch_stage1.py --out runs/stretch
"""

import argparse
import json
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from mentor_loco.config import preset
from mentor_loco.controller import PolicyParams
from mentor_loco.mentor import MentorParams
from mentor_loco.pipeline import SettingSchedule, run_stage, stage_configs
from mentor_loco.trainer import EpisodeSettings, evaluate_policy


def crossing_rate(policy, env, mentor, episodes, seed):
    settings = EpisodeSettings(gap_size_range=(0.3, 0.3), gap_x_range=(2.0, 2.0))
    _, logs = evaluate_policy(policy, env, settings, mentor, episodes, seed=seed)
    return float(np.mean([l["crossed"] for l in logs])), logs


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs/stretch")
    ap.add_argument("--members", type=int, default=10)
    ap.add_argument("--budget-steps", type=int, default=1_200_000, help="control steps per member")
    ap.add_argument("--episodes", type=int, default=20)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    cfg = preset("desk").with_seed(args.seed)
    cfg = replace(cfg, env={"horizon": 600},
                  pipeline=replace(cfg.pipeline, max_iterations=(100_000,) * 3))
    env = cfg.env_config()
    s1 = stage_configs(cfg.pipeline, cfg.ars)[0]
    s1 = replace(s1, population=args.members, step_budget=args.budget_steps,
                 gap_size=SettingSchedule("fixed", 0.3), gap_x=SettingSchedule("fixed", 2.0),
                 eval_every=25)
    out = Path(args.out)
    t0 = time.perf_counter()
    res = run_stage(s1, env, master_seed=args.seed, out_dir=out / "stage1", workers=args.workers)
    members = []
    for i in range(args.members):
        pol = PolicyParams.load(out / "stage1" / f"member_{i}" / "policy.json")
        m = MentorParams(**pol.meta["mentor"])
        rate, _ = crossing_rate(pol, env, m, args.episodes, seed=999)
        members.append({"member": i, "mentor": m.to_dict(), "eval_return": pol.meta["eval_return"],
                        "crossing_rate": rate})
        print(f"member {i}: return {pol.meta['eval_return']:7.3f}  crossing rate {rate:.2f}  "
              f"mentor {np.round(m.as_tuple(), 3).tolist()}")
    best_rate = members[res.best_member]["crossing_rate"]
    summary = {"best_member": res.best_member, "best_return": res.best_return,
               "best_crossing_rate": best_rate,
               "any_member_crossing_rate": max(m["crossing_rate"] for m in members),
               "members": members, "budget_steps_per_member": args.budget_steps,
               "seconds": time.perf_counter() - t0}
    (out / "summary.json").write_text(json.dumps(summary, indent=2))
    print(f"best member {res.best_member}: crossing rate {best_rate:.2f} over "
          f"{args.episodes} episodes ({summary['seconds'] / 60:.1f} min)")


if __name__ == "__main__":
    main()
