"""Epoch-based interval elimination with interval confidence bounds.

Each epoch keeps the intervals whose upper confidence bound reaches the best
lower confidence bound, halves them, and tops every endpoint and midpoint
up to ``n_h = ceil(sigma2 * 2**(h + 1))`` observations.  Averages pool every
observation of a point across epochs.  ``W(0) = 0`` is known exactly and is
never queried.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import rng
from .bm_core import MAX_POINT_DEPTH, DyadicPoint, alpha, eta
from .noisy_oracle import NoisyOracle

ORIGIN = DyadicPoint(0, 0)
RIGHT_END = DyadicPoint(0, 1)


class StateError(RuntimeError):
    pass


@dataclass(frozen=True)
class ConfidenceParams:
    """Failure probability, noise variance and an optional slack multiplier.

    ``slack_scale`` multiplies ``eta + alpha`` in the confidence bounds.  It
    is 1 for the algorithm as stated; other values exist only to study how
    strongly the constants drive elimination.
    """

    delta: float
    sigma2: float
    slack_scale: float = 1.0

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise ValueError(f"delta {self.delta} outside (0, 1)")
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be >= 0")
        if not self.slack_scale > 0:
            raise ValueError("slack_scale must be positive")

    @classmethod
    def for_budget(cls, budget: int, sigma2: float, delta: float | None = None, slack_scale: float = 1.0) -> "ConfidenceParams":
        """Default failure probability ``T ** -0.5`` unless overridden."""
        if delta is None:
            if budget < 2:
                raise ValueError("default delta needs a budget of at least 2")
            delta = budget**-0.5
        return cls(delta=delta, sigma2=sigma2, slack_scale=slack_scale)

    def slack(self, width: float) -> float:
        return self.slack_scale * (eta(width, self.delta) + alpha(width, self.delta))


@dataclass(frozen=True, order=True)
class IntervalRec:
    """The dyadic cell ``[k / 2**h, (k + 1) / 2**h]``."""

    epoch: int
    index: int

    def __post_init__(self):
        if not 0 <= self.index < (1 << self.epoch):
            raise ValueError(f"cell {self.index} outside depth {self.epoch}")

    @cached_property
    def lo(self) -> DyadicPoint:
        return DyadicPoint(self.epoch, self.index)

    @cached_property
    def hi(self) -> DyadicPoint:
        return DyadicPoint(self.epoch, self.index + 1)

    @cached_property
    def mid(self) -> DyadicPoint:
        return DyadicPoint(self.epoch + 1, 2 * self.index + 1)

    @property
    def width(self) -> float:
        return 2.0**-self.epoch

    def children(self) -> tuple["IntervalRec", "IntervalRec"]:
        return IntervalRec(self.epoch + 1, 2 * self.index), IntervalRec(self.epoch + 1, 2 * self.index + 1)


class Tally:
    """All observations of one point; the mean is an exactly rounded sum / count."""

    __slots__ = ("chunks", "count", "_mean")

    def __init__(self):
        self.chunks: list[np.ndarray] = []
        self.count: float = 0
        self._mean: float | None = None

    @classmethod
    def known(cls, value: float) -> "Tally":
        t = cls()
        t.count = math.inf
        t._mean = float(value)
        return t

    def add(self, values: np.ndarray):
        if math.isinf(self.count):
            raise StateError("cannot add observations to a known point")
        self.chunks.append(values)
        self.count += len(values)
        self._mean = None

    @property
    def mean(self) -> float:
        if self._mean is None:
            if not self.count:
                raise StateError("mean of an unobserved point")
            self._mean = math.fsum(np.concatenate(self.chunks).tolist()) / self.count
        return self._mean


@dataclass
class EpochState:
    h: int
    intervals: list[IntervalRec]
    averages: dict[DyadicPoint, Tally]
    t: int = 0


@dataclass(frozen=True)
class EpochRecord:
    """What the selection step of one epoch saw (used for event checks)."""

    h: int
    intervals: tuple[IntervalRec, ...]
    means: dict
    ucb: tuple[float, ...]
    lcb: tuple[float, ...]
    candidates: tuple[IntervalRec, ...]


@dataclass(frozen=True)
class Segment:
    point: DyadicPoint
    count: int
    epoch: int


@dataclass
class RunTrace:
    """Ordered queries of one run, run-length encoded by (point, epoch)."""

    budget: int
    params: ConfidenceParams
    segments: list[Segment] = field(default_factory=list)
    epochs: list[EpochRecord] = field(default_factory=list)
    epochs_completed: int = 0
    truncated: bool = False
    state: EpochState | None = None

    @property
    def n_queries(self) -> int:
        return sum(s.count for s in self.segments)

    @property
    def max_depth(self) -> int:
        return max((s.point.depth for s in self.segments), default=0)

    def points(self) -> list[DyadicPoint]:
        return [s.point for s in self.segments for _ in range(s.count)]

    def distinct_points(self) -> list[DyadicPoint]:
        return sorted({s.point for s in self.segments})

    def counts(self) -> np.ndarray:
        return np.array([s.count for s in self.segments], dtype=np.int64)

    def _append(self, p: DyadicPoint, n: int, epoch: int):
        last = self.segments[-1] if self.segments else None
        if last is not None and last.point == p and last.epoch == epoch:
            self.segments[-1] = Segment(p, last.count + n, epoch)
        else:
            self.segments.append(Segment(p, n, epoch))


def n_samples(h: int, sigma2: float) -> int:
    if h < 0:
        raise ValueError("epoch must be >= 0")
    return max(1, math.ceil(sigma2 * 2.0 ** (h + 1)))


def _means(interval: IntervalRec, averages) -> tuple[float, float]:
    try:
        return averages[interval.lo].mean, averages[interval.hi].mean
    except (KeyError, StateError) as exc:
        raise StateError(f"endpoint of {interval} not observed") from exc


def ucb(interval: IntervalRec, averages, params: ConfidenceParams) -> float:
    a, b = _means(interval, averages)
    return max(a, b) + params.slack(interval.width)


def lcb(interval: IntervalRec, averages, params: ConfidenceParams) -> float:
    a, b = _means(interval, averages)
    return min(a, b) - params.slack(interval.width)


def _bounds(intervals, averages, params):
    # all intervals of an epoch share one width, hence one slack
    slacks = {}
    ups, lows = [], []
    for i in intervals:
        s = slacks.get(i.epoch)
        if s is None:
            s = slacks[i.epoch] = params.slack(i.width)
        a, b = _means(i, averages)
        ups.append(max(a, b) + s)
        lows.append(min(a, b) - s)
    return ups, lows


def select_candidates(state: EpochState, params: ConfidenceParams) -> list[IntervalRec]:
    """Intervals whose UCB is at least the largest LCB (never empty)."""
    if not state.intervals:
        raise StateError("empty interval set")
    ups, lows = _bounds(state.intervals, state.averages, params)
    best = max(lows)
    return [i for i, u in zip(state.intervals, ups) if u >= best]


def split(candidates) -> tuple[list[IntervalRec], list[DyadicPoint]]:
    intervals = sorted({c for i in candidates for c in i.children()})
    points = sorted({p for i in candidates for p in (i.lo, i.mid, i.hi)})
    return intervals, points


def run(oracle: NoisyOracle, params: ConfidenceParams, depth_cap: int = MAX_POINT_DEPTH) -> RunTrace:
    """Run the elimination loop until the oracle budget is spent.

    The run stops at the exact query where the budget runs out; a partially
    sampled epoch sets ``truncated``.
    """
    if oracle.spent != 0:
        raise StateError("oracle must be fresh")
    state = EpochState(h=0, intervals=[IntervalRec(0, 0)], averages={ORIGIN: Tally.known(0.0)})
    trace = RunTrace(budget=oracle.budget, params=params, state=state)

    def sample(p: DyadicPoint, n: int, epoch: int) -> bool:
        k = min(n, oracle.remaining())
        if k > 0:
            y = oracle.query_many(p, k)
            state.averages.setdefault(p, Tally()).add(y)
            trace._append(p, k, epoch)
        state.t = oracle.spent
        return k == n

    if not sample(RIGHT_END, max(1, math.ceil(params.sigma2)), 0):
        trace.truncated = True
        return trace

    while oracle.remaining() > 0:
        h = state.h
        if h + 1 > depth_cap:
            raise StateError(f"refinement beyond depth cap {depth_cap}")
        ups, lows = _bounds(state.intervals, state.averages, params)
        best = max(lows)
        candidates = [i for i, u in zip(state.intervals, ups) if u >= best]
        trace.epochs.append(
            EpochRecord(
                h=h,
                intervals=tuple(state.intervals),
                means={p: state.averages[p].mean for i in state.intervals for p in (i.lo, i.hi)},
                ucb=tuple(ups),
                lcb=tuple(lows),
                candidates=tuple(candidates),
            )
        )
        intervals, points = split(candidates)
        target = n_samples(h, params.sigma2)
        todo, need = [], []
        for p in points:
            have = state.averages[p].count if p in state.averages else 0
            if have < target:
                todo.append(p)
                need.append(int(target - have))
        # cut the epoch at the exact query where the budget runs out
        left, short = oracle.remaining(), False
        for i, n in enumerate(need):
            if n >= left:
                short = n > left or i < len(need) - 1
                todo, need = todo[: i + 1], need[:i] + [left]
                break
            left -= n
        for p, y, n in zip(todo, oracle.query_batch(todo, need), need):
            if n:
                state.averages.setdefault(p, Tally()).add(y)
                trace._append(p, n, h)
        state.t = oracle.spent
        if short:
            trace.truncated = True
            return trace
        state.intervals = intervals
        state.h = h + 1
        trace.epochs_completed += 1
    return trace


def recommend(trace: RunTrace, key: int, mode: str = "multiset") -> DyadicPoint:
    """Uniform draw over the queried points.

    ``multiset`` weights each point by how often it was queried (so the
    expected simple regret is the average per-query regret); ``set`` draws
    uniformly over distinct points.
    """
    if not trace.segments:
        raise StateError("empty trace")
    u = float(rng.uniforms(rng.fold(key, rng.RECOMMEND), 0)[0])
    if mode == "set":
        pts = trace.distinct_points()
        return pts[min(int(u * len(pts)), len(pts) - 1)]
    if mode != "multiset":
        raise ValueError(f"unknown mode {mode!r}")
    n = trace.n_queries
    i = min(int(u * n), n - 1)
    for s in trace.segments:
        if i < s.count:
            return s.point
        i -= s.count
    raise AssertionError("unreachable")


def kappa(h: int, delta: float) -> float:
    w = 2.0**-h
    return 2.5 * alpha(w, delta) + eta(w, delta)


def run_uniform_grid(oracle: NoisyOracle, params: ConfidenceParams | None = None) -> RunTrace:
    """Baseline: sweep the coarsest grid with at least ``budget`` points, left to right."""
    T = oracle.budget
    depth = max(1, math.ceil(math.log2(max(T, 2))))
    trace = RunTrace(budget=T, params=params or ConfidenceParams(0.5, oracle.sigma2))
    k = 1
    while oracle.remaining() > 0:
        p = DyadicPoint(depth, k)
        oracle.query_many(p, 1)
        trace._append(p, 1, depth)
        k = k + 1 if k < (1 << depth) else 1
    return trace
