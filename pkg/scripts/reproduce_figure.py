"""Mean R_T / sqrt(T) against T over the large-budget sweep.

Runs the ``paper-scale`` preset (20 paths x 10 noise seeds per budget) and
writes runs.csv, aggregate.csv, summary.json and regret.svg.  Budgets can be
restricted with ``--T`` to run the sweep in pieces.
"""

import argparse

from bmopt.config import PRESETS
from bmopt.experiment import run_experiment


def main():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--T", type=int, nargs="+")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", default="out/paper-scale")
    p.add_argument("--path-seeds", type=int)
    p.add_argument("--noise-seeds", type=int)
    a = p.parse_args()
    cfg = PRESETS["paper-scale"].replace(parallelism=a.jobs, output_dir=a.out)
    if a.T:
        cfg = cfg.replace(T_grid=tuple(a.T))
    if a.path_seeds:
        cfg = cfg.replace(path_seeds=a.path_seeds)
    if a.noise_seeds:
        cfg = cfg.replace(noise_seeds_per_path=a.noise_seeds)
    res = run_experiment(cfg)
    for g in res.aggregates:
        print(f"T={g.T:>9}  R_T/sqrt(T) = {g.mean_RT_over_sqrtT:9.3f} +- {g.std_RT_over_sqrtT:.3f}")
    print(f"figure: {res.files['regret.svg']}")


if __name__ == "__main__":
    main()
