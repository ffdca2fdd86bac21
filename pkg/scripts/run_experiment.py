"""Regret-scaling study with an optional confidence-slack multiplier.

    python scripts/run_experiment.py --preset desk
    python scripts/run_experiment.py --preset desk --slack-scale 0.1 --out out/slack-0.1
"""

import argparse
import json

from bmopt.config import PRESETS
from bmopt.experiment import run_experiment


def main():
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--preset", choices=sorted(PRESETS), default="desk")
    p.add_argument("--slack-scale", type=float, default=1.0)
    p.add_argument("--T", type=int, nargs="+")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out")
    a = p.parse_args()
    cfg = PRESETS[a.preset].replace(slack_scale=a.slack_scale, parallelism=a.jobs)
    if a.T:
        cfg = cfg.replace(T_grid=tuple(a.T))
    if a.out:
        cfg = cfg.replace(output_dir=a.out)
    res = run_experiment(cfg)
    print(f"{'T':>9} {'mean R_T':>12} {'R_T/sqrt(T)':>12} {'std':>8} {'r_T*sqrt(T)':>12}")
    for g in res.aggregates:
        print(f"{g.T:>9} {g.mean_R_T:12.2f} {g.mean_RT_over_sqrtT:12.3f} {g.std_RT_over_sqrtT:8.3f} {g.mean_rT_times_sqrtT:12.3f}")
    print(json.dumps(res.summary.as_dict(), indent=2))


if __name__ == "__main__":
    main()
