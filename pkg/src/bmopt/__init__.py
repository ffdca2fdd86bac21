"""Noisy optimization of a one-dimensional Brownian path."""

from .bm_core import DyadicPath, DyadicPoint, MaxRecord, alpha, bridge_max_survival, eta, grid_batch, path_max, path_new, path_value
from .noisy_oracle import BudgetExhausted, NoisyOracle
from .optimizer import ConfidenceParams, RunTrace, StateError, kappa, n_samples, recommend, run
from .regret import RegretReport, score

__all__ = [
    "BudgetExhausted",
    "ConfidenceParams",
    "DyadicPath",
    "DyadicPoint",
    "MaxRecord",
    "NoisyOracle",
    "RegretReport",
    "RunTrace",
    "StateError",
    "alpha",
    "bridge_max_survival",
    "eta",
    "grid_batch",
    "kappa",
    "n_samples",
    "path_max",
    "path_new",
    "path_value",
    "recommend",
    "run",
    "score",
]
