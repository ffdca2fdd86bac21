"""Budgeted noisy evaluation of a path: ``y_t = W(x_t) + z_t``."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from . import rng
from .bm_core import DyadicPoint


class BudgetExhausted(RuntimeError):
    pass


class PathLike(Protocol):
    def value(self, p: DyadicPoint) -> float: ...


@dataclass
class NoisyOracle:
    """Noisy oracle with a hard query budget.

    The noise of the ``t``-th query (0-based) is a function of
    ``(noise_seed, t)`` only, so a batch of ``n`` queries at one point returns
    exactly what ``n`` single queries would.  The log is kept as runs of
    ``(point, values)``; :attr:`log` expands it.
    """

    source: PathLike
    sigma2: float
    budget: int
    noise_seed: int = 0
    spent: int = 0
    runs: list[tuple[DyadicPoint, np.ndarray]] = field(default_factory=list, repr=False)

    def __post_init__(self):
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be >= 0")
        if self.budget < 0:
            raise ValueError("budget must be >= 0")
        self._key = rng.fold(self.noise_seed, rng.NOISE)
        self._sd = math.sqrt(self.sigma2)

    def remaining(self) -> int:
        return self.budget - self.spent

    def query_many(self, p: DyadicPoint, n: int) -> np.ndarray:
        if n < 0:
            raise ValueError("n must be >= 0")
        if n > self.remaining():
            raise BudgetExhausted(f"{n} queries requested, {self.remaining()} left")
        if n == 0:
            return np.empty(0)
        t = np.arange(self.spent, self.spent + n, dtype=np.uint64)
        w = self.source.value(p)
        if self._sd == 0.0:
            y = np.full(n, w)
        else:
            y = w + self._sd * rng.normals(self._key, t)
        self.spent += n
        self.runs.append((p, y))
        return y

    def query_batch(self, points, counts) -> list[np.ndarray]:
        """``query_many`` over several points in order, with a single noise draw.

        Returns exactly what the sequence of ``query_many`` calls would.
        """
        counts = [int(n) for n in counts]
        if any(n < 0 for n in counts):
            raise ValueError("counts must be >= 0")
        total = sum(counts)
        if total > self.remaining():
            raise BudgetExhausted(f"{total} queries requested, {self.remaining()} left")
        if total == 0:
            return [np.empty(0) for _ in counts]
        w = np.repeat([self.source.value(p) for p in points], counts)
        if self._sd == 0.0:
            y = w
        else:
            t = np.arange(self.spent, self.spent + total, dtype=np.uint64)
            y = w + self._sd * rng.normals(self._key, t)
        out = np.split(y, np.cumsum(counts)[:-1])
        for p, ys in zip(points, out):
            if ys.size:
                self.runs.append((p, ys))
        self.spent += total
        return out

    def query(self, p: DyadicPoint) -> float:
        if self.spent >= self.budget:
            raise BudgetExhausted(f"budget of {self.budget} queries exhausted")
        return float(self.query_many(p, 1)[0])

    @property
    def log(self) -> list[tuple[DyadicPoint, float]]:
        return [(p, float(v)) for p, ys in self.runs for v in ys]


def query(oracle: NoisyOracle, p: DyadicPoint) -> float:
    return oracle.query(p)


def remaining(oracle: NoisyOracle) -> int:
    return oracle.remaining()
