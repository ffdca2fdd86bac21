"""Command line entry point: simulate, experiment, verify, lowerbound."""

from __future__ import annotations

import argparse
import json
import sys

from .config import PRESETS, SUITE_PRESETS, ConfigError, ExperimentConfig, SuiteConfig, from_mapping, load_json

EXIT_OK, EXIT_CHECK_FAILED, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(EXIT_USAGE)


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bmopt", description="Noisy optimization of a Brownian path.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sim = sub.add_parser("simulate", help="one run; prints its regret report as JSON")
    sim.add_argument("--seed", type=int, default=0, help="path seed")
    sim.add_argument("--noise-seed", type=int, default=0)
    sim.add_argument("--T", type=int, default=10_000)
    sim.add_argument("--sigma2", type=float, default=0.5)
    sim.add_argument("--delta", type=float, default=None)
    sim.add_argument("--truth-depth", type=int, default=20)

    ex = sub.add_parser("experiment", help="regret-scaling study (CSV + SVG)")
    ex.add_argument("--preset", choices=sorted(PRESETS), default="desk")
    ex.add_argument("--config", help="JSON file with ExperimentConfig fields")
    ex.add_argument("--seed", type=int)
    ex.add_argument("--T", type=int, nargs="+", help="budgets (T_grid)")
    ex.add_argument("--sigma2", type=float)
    ex.add_argument("--delta", type=float)
    ex.add_argument("--truth-depth", type=int)
    ex.add_argument("--out")
    ex.add_argument("--jobs", type=int)

    ver = sub.add_parser("verify", help="Monte Carlo lemma suite")
    ver.add_argument("--preset", choices=sorted(SUITE_PRESETS), default="full")
    ver.add_argument("--config", help="JSON file with SuiteConfig fields")
    ver.add_argument("--seed", type=int)
    ver.add_argument("--out")

    low = sub.add_parser("lowerbound", help="Fano-floor sweep over budgets")
    low.add_argument("--T", type=int, nargs="+", default=[1_000])
    low.add_argument("--sigma2", type=float, default=0.5)
    low.add_argument("--delta", type=float, default=0.5)
    low.add_argument("--seed", type=int, default=0)
    low.add_argument("--n-seeds", type=int, default=500)
    low.add_argument("--batch-size", type=int, default=100)
    low.add_argument("--truth-depth", type=int, default=16)
    low.add_argument("--out", default="out/lowerbound")
    return p


def _experiment_config(a) -> ExperimentConfig:
    cfg = PRESETS[a.preset]
    if a.config:
        cfg = from_mapping(ExperimentConfig, load_json(a.config), base=cfg)
    over = {
        "seed": a.seed,
        "T_grid": a.T,
        "sigma2": a.sigma2,
        "delta_override": a.delta,
        "truth_depth": a.truth_depth,
        "output_dir": a.out,
        "parallelism": a.jobs,
    }
    return from_mapping(ExperimentConfig, {k: v for k, v in over.items() if v is not None}, base=cfg)


def _suite_config(a) -> SuiteConfig:
    cfg = SUITE_PRESETS[a.preset]
    if a.config:
        cfg = from_mapping(SuiteConfig, load_json(a.config), base=cfg)
    over = {"seed": a.seed, "output_dir": a.out}
    return from_mapping(SuiteConfig, {k: v for k, v in over.items() if v is not None}, base=cfg)


def _simulate(a) -> int:
    from .bm_core import DyadicPath
    from .noisy_oracle import NoisyOracle
    from .optimizer import ConfidenceParams, recommend, run
    from .regret import score

    if a.T < 1:
        raise ConfigError("--T must be >= 1")
    path = DyadicPath(a.seed)
    oracle = NoisyOracle(path, a.sigma2, a.T, noise_seed=a.noise_seed)
    params = ConfidenceParams.for_budget(a.T, a.sigma2, a.delta)
    trace = run(oracle, params)
    rep = score(trace, recommend(trace, a.noise_seed), path, a.truth_depth)
    out = {**rep.summary(), "epochs_completed": trace.epochs_completed, "delta": params.delta, "sigma2": a.sigma2, "seed": a.seed, "noise_seed": a.noise_seed}
    print(json.dumps(out, indent=2))
    return EXIT_OK


def _experiment(a) -> int:
    from .experiment import run_experiment

    cfg = _experiment_config(a)
    res = run_experiment(cfg)
    for ag in res.aggregates:
        print(f"T={ag.T:>9}  mean R_T={ag.mean_R_T:12.2f}  R_T/sqrt(T)={ag.mean_RT_over_sqrtT:9.3f} +- {ag.std_RT_over_sqrtT:.3f}  r_T={ag.mean_r_T:.4f}")
    print(json.dumps(res.summary.as_dict()))
    print(f"wrote {', '.join(res.files.values())}")
    return EXIT_OK


def _verify(a) -> int:
    from .suite import run_lemma_suite

    cfg = _suite_config(a)
    results = run_lemma_suite(cfg, progress=lambda n: print(f"running {n}", file=sys.stderr))
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'}  {r.name}: estimate={r.estimate:.6g} bound={r.bound:.6g} se={r.se:.3g} margin={r.margin:.3g}")
    print(f"wrote {cfg.output_dir}/report.csv")
    return EXIT_OK if all(r.passed for r in results) else EXIT_CHECK_FAILED


def _lowerbound(a) -> int:
    from .suite import lowerbound_sweep

    if a.sigma2 <= 0:
        raise ConfigError("--sigma2 must be positive for the lower bound")
    rows = lowerbound_sweep(a.T, a.sigma2, a.delta, a.n_seeds, a.batch_size, a.seed, a.truth_depth, a.out)
    bad = 0
    for algo, T, shift, batch, n, reg, fl, ok in rows:
        print(f"{algo:>14} T={T} shift={shift} batch={batch} certified={n} E[r_T]={float(reg):.4g} floor={float(fl):.3g} {'ok' if ok == '1' else 'BELOW'}")
        bad += algo != "genie" and ok != "1"
    return EXIT_OK if not bad else EXIT_CHECK_FAILED


def main(argv=None) -> int:
    a = _parser().parse_args(argv)
    try:
        return {"simulate": _simulate, "experiment": _experiment, "verify": _verify, "lowerbound": _lowerbound}[a.command](a)
    except ConfigError as exc:
        print(f"bmopt: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
