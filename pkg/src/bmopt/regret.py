"""Regret of a finished run against the discretized ground truth."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bm_core import DyadicPath, DyadicPoint, MaxRecord, eta, path_max
from .optimizer import RunTrace


@dataclass
class RegretReport:
    cumulative: float
    simple: float
    per_query: np.ndarray
    truth: MaxRecord
    recommendation: DyadicPoint
    truncation_flag: bool
    discretization_bound: float

    def summary(self) -> dict:
        return {
            "T": int(self.per_query.size),
            "R_T": self.cumulative,
            "r_T": self.simple,
            "recommendation": str(self.recommendation.fraction),
            "truth_argmax": str(self.truth.argmax.fraction),
            "truth_max": self.truth.value,
            "truth_depth": self.truth.truth_depth,
            "truncated": self.truncation_flag,
            "discretization_bound": self.discretization_bound,
        }


def score(
    trace: RunTrace,
    recommendation: DyadicPoint,
    path: DyadicPath,
    truth_depth: int,
    delta: float | None = None,
) -> RegretReport:
    """Per-query, cumulative and simple regret against the depth-``truth_depth`` maximum.

    ``discretization_bound`` is the confidence allowance ``eta(2**-H, delta)``
    by which the continuum maximum may exceed the grid maximum.
    """
    if not trace.segments:
        raise ValueError("empty trace")
    deepest = max(trace.max_depth, recommendation.depth)
    if truth_depth < deepest:
        raise ValueError(f"truth_depth {truth_depth} shallower than queried depth {deepest}")
    truth = path_max(path, truth_depth)
    grid = path.grid(truth_depth)
    gaps = np.array([truth.value - grid[s.point.index_at(truth_depth)] for s in trace.segments])
    per_query = np.repeat(gaps, trace.counts())
    simple = truth.value - float(grid[recommendation.index_at(truth_depth)])
    d = trace.params.delta if delta is None else delta
    return RegretReport(
        cumulative=math.fsum(per_query.tolist()),
        simple=simple,
        per_query=per_query,
        truth=truth,
        recommendation=recommendation,
        truncation_flag=trace.truncated,
        discretization_bound=eta(2.0**-truth_depth, d),
    )
