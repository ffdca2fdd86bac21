"""The regret-scaling study: many (path, noise) replications per budget."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import rng
from .bm_core import DyadicPath
from .config import ExperimentConfig, RunRecord
from .noisy_oracle import NoisyOracle
from .optimizer import ConfidenceParams, recommend, run
from .regret import score
from .svg import error_bar_plot

SCHEMA = "bmopt-runs/1"
AGG_SCHEMA = "bmopt-aggregate/1"
AGG_COLUMNS = (
    "T", "n", "mean_R_T", "std_R_T", "mean_RT_over_sqrtT", "std_RT_over_sqrtT",
    "mean_r_T", "std_r_T", "mean_rT_times_sqrtT", "truncated_frac", "mean_epochs",
)
TRUTH_MARGIN = 4


def path_key(cfg: ExperimentConfig, path_seed: int) -> int:
    return rng.fold_int(cfg.seed, rng.PATH, path_seed)


def noise_key(cfg: ExperimentConfig, path_seed: int, noise_seed: int) -> int:
    return rng.fold_int(cfg.seed, path_seed, noise_seed)


def run_one(cfg: ExperimentConfig, path: DyadicPath, path_seed: int, noise_seed: int, T: int) -> RunRecord:
    start = time.perf_counter()
    oracle = NoisyOracle(path, cfg.sigma2, T, noise_seed=noise_key(cfg, path_seed, noise_seed))
    params = ConfidenceParams.for_budget(T, cfg.sigma2, cfg.delta_override, cfg.slack_scale)
    trace = run(oracle, params)
    if trace.max_depth + TRUTH_MARGIN > cfg.truth_depth:
        raise ValueError(f"truth_depth {cfg.truth_depth} is less than {TRUTH_MARGIN} below the deepest query ({trace.max_depth})")
    rec = recommend(trace, rng.fold_int(noise_key(cfg, path_seed, noise_seed), T))
    rep = score(trace, rec, path, cfg.truth_depth)
    wall = (time.perf_counter() - start) * 1e3 if cfg.record_wall_time else None
    return RunRecord(T, path_seed, noise_seed, rep.cumulative, rep.simple, trace.epochs_completed, trace.truncated, rep.discretization_bound, wall)


def run_path(cfg: ExperimentConfig, path_seed: int) -> list[RunRecord]:
    """All noise seeds and budgets for one path (one unit of parallel work)."""
    path = DyadicPath(path_key(cfg, path_seed))
    path.grid(cfg.truth_depth)
    return [run_one(cfg, path, path_seed, j, T) for j in range(cfg.noise_seeds_per_path) for T in cfg.T_grid]


def collect(cfg: ExperimentConfig) -> list[RunRecord]:
    seeds = range(cfg.path_seeds)
    if cfg.parallelism > 1:
        with ProcessPoolExecutor(cfg.parallelism) as ex:
            parts = list(ex.map(run_path, [cfg] * len(seeds), seeds))
    else:
        parts = [run_path(cfg, s) for s in seeds]
    return sorted((r for p in parts for r in p), key=lambda r: r.key)


@dataclass(frozen=True)
class Aggregate:
    T: int
    n: int
    mean_R_T: float
    std_R_T: float
    mean_RT_over_sqrtT: float
    std_RT_over_sqrtT: float
    mean_r_T: float
    std_r_T: float
    mean_rT_times_sqrtT: float
    truncated_frac: float
    mean_epochs: float

    def row(self) -> list[str]:
        return [str(self.T), str(self.n)] + [repr(getattr(self, c)) for c in AGG_COLUMNS[2:]]


def _std(x: np.ndarray) -> float:
    return float(x.std(ddof=1)) if x.size > 1 else 0.0


def aggregate(records: list[RunRecord]) -> list[Aggregate]:
    out = []
    for T in sorted({r.T for r in records}):
        rs = [r for r in records if r.T == T]
        R = np.array([r.R_T for r in rs])
        s = np.array([r.r_T for r in rs])
        out.append(Aggregate(
            T, len(rs),
            float(R.mean()), _std(R),
            float(R.mean() / math.sqrt(T)), _std(R / math.sqrt(T)),
            float(s.mean()), _std(s),
            float(s.mean() * math.sqrt(T)),
            sum(r.truncated for r in rs) / len(rs),
            float(np.mean([r.epochs for r in rs])),
        ))
    return out


@dataclass(frozen=True)
class ScalingSummary:
    slope: float
    rt_sqrt_ratio: float
    simple_ratio: float

    def as_dict(self) -> dict:
        d = {"loglog_slope_R_T": self.slope, "RT_over_sqrtT_last_over_first": self.rt_sqrt_ratio, "rT_times_sqrtT_last_over_first": self.simple_ratio}
        # JSON has no NaN
        return {k: None if math.isnan(v) else v for k, v in d.items()}


def scaling_summary(aggs: list[Aggregate]) -> ScalingSummary:
    Ts = np.array([a.T for a in aggs], dtype=float)
    R = np.array([a.mean_R_T for a in aggs])
    slope = float(np.polyfit(np.log(Ts), np.log(R), 1)[0]) if len(aggs) > 1 and np.all(R > 0) else float("nan")
    return ScalingSummary(
        slope,
        aggs[-1].mean_RT_over_sqrtT / aggs[0].mean_RT_over_sqrtT,
        aggs[-1].mean_rT_times_sqrtT / aggs[0].mean_rT_times_sqrtT if aggs[0].mean_rT_times_sqrtT > 0 else float("nan"),
    )


def _csv_text(schema: str, cfg: ExperimentConfig, header, rows) -> str:
    buf = io.StringIO()
    buf.write(f"# schema={schema} config_sha256={cfg.digest()}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    records: list[RunRecord]
    aggregates: list[Aggregate]
    summary: ScalingSummary
    files: dict


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> ExperimentResult:
    """Run every replication, then write runs.csv, aggregate.csv, summary.json and regret.svg."""
    records = collect(cfg)
    aggs = aggregate(records)
    summ = scaling_summary(aggs)
    files = {}
    if write:
        os.makedirs(cfg.output_dir, exist_ok=True)
        texts = {
            "runs.csv": _csv_text(SCHEMA, cfg, RunRecord.COLUMNS, [r.row() for r in records]),
            "aggregate.csv": _csv_text(AGG_SCHEMA, cfg, AGG_COLUMNS, [a.row() for a in aggs]),
            "summary.json": json.dumps({"config": cfg.result_fields(), "config_sha256": cfg.digest(), **summ.as_dict()}, indent=2, sort_keys=True) + "\n",
            "regret.svg": error_bar_plot(
                [a.T for a in aggs],
                [a.mean_RT_over_sqrtT for a in aggs],
                [a.std_RT_over_sqrtT for a in aggs],
                f"mean R_T / sqrt(T), sigma2={cfg.sigma2}, {cfg.path_seeds}x{cfg.noise_seeds_per_path} runs",
                "T",
                "R_T / sqrt(T)",
            ),
        }
        for name, text in texts.items():
            p = os.path.join(cfg.output_dir, name)
            with open(p, "w") as f:
                f.write(text)
            files[name] = p
    return ExperimentResult(cfg, records, aggs, summ, files)
