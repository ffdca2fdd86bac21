"""Runs the Monte Carlo checks and writes a pass/fail report."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
import math
import os
from fractions import Fraction
from typing import Callable

from . import lemma_verify as lv
from . import lowerbound_lab as lb
from .config import SuiteConfig
from .lemma_verify import CheckResult

SCHEMA = "bmopt-verify/1"
COLUMNS = ("name", "bound", "estimate", "se", "margin", "passed", "detail")

NEAR_OPTIMAL_CASES = ((4, 0.2), (6, 0.1), (8, 0.05))
BRIDGE_CASES = ((0.0, 0.0, 1.0, 1.0), (0.5, -0.5, 1.0, 1.0), (0.0, 1.0, 2.0, 1.5))
EXCESS_CASES = ((0.0, 1.0, 0.5), (0.25, 0.5, 0.3), (0.5, 1.0, 0.1))
MEANDER_MAX_CASES = ((0.25, 1.0, 0.2), (0.1, 1.0, 0.1), (0.6, 1.0, 0.3))
MEANDER_MIN_CASES = ((1.0, 0.5, 1.0), (0.5, 0.1, 1.0), (1.0, 0.2, 2.0))
EVENT_T_SHIFT = Fraction(1, 1024)
EVENT_T_DELTA = 0.5
EVENT_T_EXPONENT = 0.4
MAX_KS = 0.01
GAP_SLOPE_RANGE = (0.8, 1.2)
EXPECTED_RANGE = 2 * math.sqrt(2 / math.pi)


def _event_m(cfg: SuiteConfig) -> list[CheckResult]:
    res, info = lv.event_m_frequency(cfg.event_m_reps, 0.2, 8, cfg.event_m_T, 0.5, cfg.seed)
    br = info["implication_breaks"]
    return [
        dataclasses.replace(res, detail=f"{res.detail} failures={info['failures_by_event']}"),
        CheckResult.upper("event_M_implication_breaks", float(br), 0.0, 0.0, "runs where M2 and C hold but M3 fails (or mirror)"),
    ]


def _near_optimal(cfg: SuiteConfig) -> list[CheckResult]:
    return [lv.check_near_optimal(h, e, cfg.near_optimal_seeds, cfg.seed) for h, e in NEAR_OPTIMAL_CASES]


def _ks(cfg: SuiteConfig) -> list[CheckResult]:
    ks, _ = lv.running_max_ks(cfg.ks_seeds, cfg.depth, cfg.seed)
    return [CheckResult.upper("running_max_ks", ks, MAX_KS, 0.0, f"n={cfg.ks_seeds} depth={cfg.depth}")]


def _bridge(cfg: SuiteConfig) -> list[CheckResult]:
    return [lv.check_bridge(*c, cfg.bridge_seeds, cfg.depth, cfg.seed) for c in BRIDGE_CASES]


def _excess(cfg: SuiteConfig) -> list[CheckResult]:
    return [lv.check_running_max_excess(*c, cfg.excess_seeds, 10, cfg.seed) for c in EXCESS_CASES]


def _meander_max(cfg: SuiteConfig) -> list[CheckResult]:
    out = []
    for i, (s, t, x) in enumerate(MEANDER_MAX_CASES):
        p, se = lb.meander_max_tail(cfg.meander_samples, cfg.depth, s, t, x, cfg.seed * 31 + i)
        out.append(CheckResult.lower(f"meander_running_max(s={s},t={t},x={x})", p, lb.meander_max_bound(s, t, x), se, f"n={cfg.meander_samples}"))
    return out


def _meander_min(cfg: SuiteConfig) -> list[CheckResult]:
    out = []
    for i, (u, eps, t) in enumerate(MEANDER_MIN_CASES):
        p, se, kept = lb.positive_bm_min_tail(cfg.meander_samples, cfg.depth, u, eps, t, cfg.seed * 37 + i)
        out.append(CheckResult.lower(f"positive_bm_running_min(u={u},eps={eps},t={t})", p, lb.positive_bm_min_bound(u, eps), se, f"accepted={kept}"))
    return out


def _event_t(cfg: SuiteConfig) -> list[CheckResult]:
    p, se, fails = lb.event_t_frequency(cfg.event_t_seeds, EVENT_T_SHIFT, EVENT_T_DELTA, cfg.depth, cfg.seed)
    bound = lb.event_t_bound(EVENT_T_SHIFT, EVENT_T_DELTA, EVENT_T_EXPONENT)
    return [CheckResult.lower("event_T_frequency", p, bound, se, f"n={cfg.event_t_seeds} shift={EVENT_T_SHIFT} failures={fails}")]


def _fano(cfg: SuiteConfig) -> list[CheckResult]:
    shift = lb.shift_for_budget(cfg.fano_T)
    seeds = range(cfg.fano_batches * cfg.fano_batch_size)
    out = []
    for algo in (lb.random_search(cfg.depth), lb.elimination_algorithm()):
        s = lb.hypothesis_test_regret(algo, shift, 0.5, cfg.fano_T, seeds, 0.5, cfg.depth, cfg.fano_batch_size)
        out.append(CheckResult.lower(
            f"fano_floor_batches({s.algorithm})",
            s.batch_pass_fraction,
            0.95,
            0.0,
            f"T={cfg.fano_T} shift={shift} batches={len(s.batches())} certified={len(s.certified_runs)}",
        ))
    return out


def _gap(cfg: SuiteConfig) -> list[CheckResult]:
    gaps = lv.path_gaps(cfg.gap_samples, cfg.depth, cfg.seed)
    r = lv.check_gap_bound(gaps)
    lo, hi = GAP_SLOPE_RANGE
    return [
        CheckResult.interval("gap_mean", r.unconditional_mean, EXPECTED_RANGE * 0.97, EXPECTED_RANGE * 1.03, f"n={cfg.gap_samples}"),
        CheckResult.interval(
            "gap_growth_slope",
            r.slope,
            lo,
            hi,
            f"affine slope of E[Gap|A] on sqrt(log 1/P[A]); loglog exponent={r.loglog_exponent:.4f}",
        ),
    ]


CHECKS: dict[str, Callable[[SuiteConfig], list[CheckResult]]] = {
    "event_M": _event_m,
    "near_optimal": _near_optimal,
    "running_max_ks": _ks,
    "bridge_max": _bridge,
    "running_max_excess": _excess,
    "meander_max": _meander_max,
    "meander_min": _meander_min,
    "event_T": _event_t,
    "fano": _fano,
    "gap_bound": _gap,
}


def _digest(cfg: SuiteConfig) -> str:
    d = dataclasses.asdict(cfg)
    d.pop("output_dir")
    d["checks"] = list(d["checks"])
    return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()


def report_csv(cfg: SuiteConfig, results: list[CheckResult]) -> str:
    buf = io.StringIO()
    buf.write(f"# schema={SCHEMA} config_sha256={_digest(cfg)}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in results:
        w.writerow([r.name, repr(r.bound), repr(r.estimate), repr(r.se), repr(r.margin), str(int(r.passed)), r.detail])
    return buf.getvalue()


def run_lemma_suite(cfg: SuiteConfig, write: bool = True, progress: Callable[[str], None] | None = None) -> list[CheckResult]:
    """Run the configured checks in order; write report.csv and report.json."""
    unknown = [c for c in cfg.checks if c not in CHECKS]
    if unknown:
        raise ValueError(f"unknown checks: {unknown}")
    results = []
    for name in cfg.checks:
        if progress:
            progress(name)
        results.extend(CHECKS[name](cfg))
    if write:
        os.makedirs(cfg.output_dir, exist_ok=True)
        with open(os.path.join(cfg.output_dir, "report.csv"), "w") as f:
            f.write(report_csv(cfg, results))
        with open(os.path.join(cfg.output_dir, "report.json"), "w") as f:
            json.dump({"schema": SCHEMA, "config_sha256": _digest(cfg), "results": [r.row() for r in results]}, f, indent=2)
            f.write("\n")
    return results


LB_COLUMNS = ("algorithm", "T", "shift", "batch", "certified", "mean_simple_regret", "mean_fano_floor", "above_floor")


def lowerbound_sweep(
    T_list,
    sigma2: float = 0.5,
    delta: float = 0.5,
    n_seeds: int = 500,
    batch_size: int = 100,
    seed: int = 0,
    depth: int = 16,
    output_dir: str | None = None,
) -> list[list[str]]:
    """Fano-floor comparison for random search, the elimination algorithm and the genie."""
    rows = []
    for T in T_list:
        shift = lb.shift_for_budget(T)
        seeds = [seed * 1_000_003 + i for i in range(n_seeds)]
        for algo in (lb.random_search(depth), lb.elimination_algorithm(), lb.genie()):
            s = lb.hypothesis_test_regret(algo, shift, sigma2, T, seeds, delta, depth, batch_size)
            for i, (reg, fl, n) in enumerate(s.batches()):
                rows.append([s.algorithm, str(T), str(shift), str(i), str(n), repr(reg), repr(fl), str(int(reg >= fl))])
    if output_dir is not None:
        os.makedirs(output_dir, exist_ok=True)
        buf = io.StringIO()
        tag = hashlib.sha256(repr((list(T_list), sigma2, delta, n_seeds, batch_size, seed, depth)).encode()).hexdigest()
        buf.write(f"# schema=bmopt-lowerbound/1 config_sha256={tag}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(LB_COLUMNS)
        w.writerows(rows)
        with open(os.path.join(output_dir, "lowerbound.csv"), "w") as f:
            f.write(buf.getvalue())
    return rows
