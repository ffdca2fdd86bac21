"""Monte Carlo checks of the high-probability events and counting bounds.

Every comparison is one-sided in the direction of the bound it tests and
allows three standard errors of Monte Carlo slack.  Continuum suprema and
infima are replaced by extrema over a finite grid, which can only make an
event look more likely to hold: the checkers over-certify, never under-.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np
from scipy import special, stats

from . import rng
from .bm_core import MAX_GRID_DEPTH, DyadicPath, alpha, bridge_max_survival, eta, grid_batch
from .noisy_oracle import NoisyOracle
from .optimizer import ConfidenceParams, RunTrace, kappa, run

SE_SLACK = 3.0


@dataclass(frozen=True)
class CheckResult:
    """One row of a verification report.

    ``margin`` is positive when the check passes by that much.  For an upper
    bound it is ``bound + 3 se - estimate``; for a lower bound
    ``estimate - (bound - 3 se)``.
    """

    name: str
    bound: float
    estimate: float
    se: float
    margin: float
    passed: bool
    detail: str = ""

    @classmethod
    def upper(cls, name: str, estimate: float, bound: float, se: float, detail: str = "") -> "CheckResult":
        m = bound + SE_SLACK * se - estimate
        return cls(name, bound, estimate, se, m, bool(m >= 0), detail)

    @classmethod
    def lower(cls, name: str, estimate: float, bound: float, se: float, detail: str = "") -> "CheckResult":
        m = estimate - (bound - SE_SLACK * se)
        return cls(name, bound, estimate, se, m, bool(m >= 0), detail)

    @classmethod
    def interval(cls, name: str, estimate: float, lo: float, hi: float, detail: str = "") -> "CheckResult":
        m = min(estimate - lo, hi - estimate)
        return cls(name, hi, estimate, 0.0, m, bool(m >= 0), detail)

    def row(self) -> dict:
        return asdict(self)


def _freq(hits: int, n: int) -> tuple[float, float]:
    p = hits / n
    return p, math.sqrt(p * (1 - p) / n)


# --- event M ------------------------------------------------------------------


@dataclass(frozen=True)
class EventMReport:
    m1: bool
    m2: bool
    m3: bool
    m4: bool
    c_event: bool
    c_prime: bool
    delta: float
    h_check: int
    grid_depth: int

    @property
    def m(self) -> bool:
        return self.m1 and self.m2 and self.m3 and self.m4


def _cell_extrema(grid: np.ndarray, h: int, depth: int) -> tuple[np.ndarray, np.ndarray]:
    """Max and min of the grid over each depth-``h`` cell (endpoints included)."""
    s = 1 << (depth - h)
    inner = grid[:-1].reshape(1 << h, s)
    right = grid[s::s]
    return np.maximum(inner.max(axis=1), right), np.minimum(inner.min(axis=1), right)


def check_event_M(path: DyadicPath, trace: RunTrace, delta: float, h_check: int, grid_depth: int | None = None) -> EventMReport:
    """Grid version of the event that certifies the confidence bounds.

    ``M1``, ``C`` and ``C'`` range over every dyadic cell of depth at most
    ``h_check``; ``M2``-``M4`` over the intervals each recorded epoch
    (``h <= h_check``) actually scored.  ``M2`` compares the averages used at
    that selection step with the path at the interval endpoints.  Cell
    extrema come from the depth-``grid_depth`` grid.  ``C'`` is read as the
    lower mirror of ``C``: ``min W >= min(W_a, W_b) - eta``.
    """
    if not 0 < delta < 1:
        raise ValueError("delta outside (0, 1)")
    if delta >= 1 / 3:
        warnings.warn(f"delta={delta} >= 1/3: the event-M probability bound does not apply", stacklevel=2)
    if grid_depth is None:
        grid_depth = min(MAX_GRID_DEPTH, max(h_check, trace.max_depth) + 6)
    if grid_depth < h_check or grid_depth < trace.max_depth:
        raise ValueError(f"grid depth {grid_depth} cannot resolve h_check {h_check}")
    if grid_depth > MAX_GRID_DEPTH:
        raise ValueError(f"h_check {h_check} exceeds the available grid")
    g = path.grid(grid_depth)
    m1 = c_ev = c_pr = True
    for h in range(h_check + 1):
        w = 2.0**-h
        ends = g[:: 1 << (grid_depth - h)]
        lo_end, hi_end = ends[:-1], ends[1:]
        m1 &= bool(np.all(np.abs(hi_end - lo_end) <= alpha(w, delta)))
        cmax, cmin = _cell_extrema(g, h, grid_depth)
        e = eta(w, delta)
        c_ev &= bool(np.all(cmax <= np.maximum(lo_end, hi_end) + e))
        c_pr &= bool(np.all(cmin >= np.minimum(lo_end, hi_end) - e))
    m2 = m3 = m4 = True
    for rec in trace.epochs:
        h = rec.h
        if h > h_check:
            break
        a = alpha(2.0**-h, delta)
        for p, mean in rec.means.items():
            if math.isinf(a) or abs(mean - g[p.index_at(grid_depth)]) > a:
                m2 = False
        cmax, cmin = _cell_extrema(g, h, grid_depth)
        for iv, u, lo in zip(rec.intervals, rec.ucb, rec.lcb):
            m3 &= bool(cmax[iv.index] <= u)
            m4 &= bool(cmin[iv.index] >= lo)
    return EventMReport(m1, m2, m3, m4, c_ev, c_pr, delta, h_check, grid_depth)


def event_m_frequency(
    n: int,
    delta: float = 0.2,
    h_check: int = 8,
    T: int = 20_000,
    sigma2: float = 0.5,
    seed: int = 0,
) -> tuple[CheckResult, dict]:
    """Frequency of the failure of event M against the ``delta ** 2`` bound.

    Each replication runs the algorithm with the given ``delta`` on a fresh
    path and noise stream.  Also counts violations of the implication
    ``M2 and C -> M3`` (and its lower mirror), which must be zero.
    """
    fails = implication_breaks = 0
    counts = {"m1": 0, "m2": 0, "m3": 0, "m4": 0, "c": 0, "c_prime": 0}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for i in range(n):
            path_seed = rng.fold_int(seed, 0xE1, i)
            path = DyadicPath(path_seed)
            path.grid(h_check + 6)  # later lookups hit the dense grid
            oracle = NoisyOracle(path, sigma2, T, noise_seed=rng.fold_int(seed, 0xE2, i))
            trace = run(oracle, ConfidenceParams(delta, sigma2))
            r = check_event_M(path, trace, delta, h_check)
            fails += not r.m
            for k, v in (("m1", r.m1), ("m2", r.m2), ("m3", r.m3), ("m4", r.m4), ("c", r.c_event), ("c_prime", r.c_prime)):
                counts[k] += not v
            if (r.m2 and r.c_event and not r.m3) or (r.m2 and r.c_prime and not r.m4):
                implication_breaks += 1
    p, se = _freq(fails, n)
    res = CheckResult.upper("event_M_failure", p, delta**2, se, f"n={n} delta={delta} H_check={h_check} T={T}")
    return res, {"failures_by_event": counts, "implication_breaks": implication_breaks}


def epoch_regret_violations(path: DyadicPath, trace: RunTrace, truth_depth: int) -> list[tuple[int, float, float]]:
    """Sampled points whose regret exceeds ``4 kappa_h`` for their epoch.

    Returns ``(epoch, regret, 4 kappa_h)`` triples; empty when the bound holds.
    """
    g = path.grid(truth_depth)
    top = float(g.max())
    d = trace.params.delta
    out = []
    for s in trace.segments:
        r = top - float(g[s.point.index_at(truth_depth)])
        b = 4 * kappa(s.epoch, d)
        if r > b:
            out.append((s.epoch, r, b))
    return out


# --- near-optimal counting ----------------------------------------------------


def count_near_optimal(path: DyadicPath, h: int, eta_gap: float) -> int:
    """Number of depth-``h`` grid points within ``eta_gap`` of the depth-``h`` grid maximum."""
    g = path.grid(h)
    return int(np.count_nonzero(g >= g.max() - eta_gap))


def count_near_optimal_batch(seeds, h: int, eta_gap: float, chunk: int = 5_000) -> np.ndarray:
    seeds = np.asarray(seeds, dtype=np.uint64)
    out = np.empty(seeds.size, dtype=np.int64)
    for lo in range(0, seeds.size, chunk):
        g = grid_batch(seeds[lo : lo + chunk], h)
        out[lo : lo + chunk] = np.count_nonzero(g >= g.max(axis=1, keepdims=True) - eta_gap, axis=1)
    return out


def near_optimal_bound(h: int, eta_gap: float) -> float:
    return 6 * eta_gap**2 * 2**h


def check_near_optimal(h: int, eta_gap: float, n: int, seed: int = 0) -> CheckResult:
    counts = count_near_optimal_batch(rng.fold(seed, 0xC0, np.arange(n, dtype=np.uint64)), h, eta_gap)
    se = float(counts.std(ddof=1) / math.sqrt(n))
    return CheckResult.upper(f"near_optimal_count(h={h},eta={eta_gap})", float(counts.mean()), near_optimal_bound(h, eta_gap), se, f"n={n}")


# --- running maximum and bridges -----------------------------------------------


def running_max_ks(n: int, depth: int = 14, seed: int = 0, chunk: int = 2_000) -> tuple[float, np.ndarray]:
    """KS distance between grid maxima on [0, 1] and the ``|N(0, 1)|`` law.

    The grid maximum sits stochastically below the continuum one, so the
    statistic carries a small one-sided discretization bias.
    """
    seeds = rng.fold(seed, 0xA1, np.arange(n, dtype=np.uint64))
    maxima = np.concatenate([grid_batch(seeds[i : i + chunk], depth).max(axis=1) for i in range(0, n, chunk)])
    ks = stats.kstest(maxima, lambda b: np.where(b > 0, special.erf(b / math.sqrt(2)), 0.0)).statistic
    return float(ks), maxima


def bridge_exceedance(w_a: float, w_b: float, length: float, y: float, n: int, depth: int = 14, seed: int = 0, chunk: int = 2_000) -> tuple[float, float]:
    """Frequency with which a grid Brownian bridge from ``w_a`` to ``w_b`` exceeds ``y``.

    Bridges come from engine paths ``W`` on ``[0, length]`` as
    ``W - (u / length) W(length) + linear interpolation``.
    """
    seeds = rng.fold(seed, 0xB1, np.arange(n, dtype=np.uint64))
    m = 1 << depth
    u = np.linspace(0.0, 1.0, m + 1)
    line = w_a + (w_b - w_a) * u
    hits = 0
    for i in range(0, n, chunk):
        w = grid_batch(seeds[i : i + chunk], depth, domain=(0, 1)) * math.sqrt(length)
        b = w - u * w[:, -1:] + line
        hits += int(np.count_nonzero(b.max(axis=1) > y))
    return _freq(hits, n)


def check_bridge(w_a: float, w_b: float, length: float, y: float, n: int, depth: int = 14, seed: int = 0) -> CheckResult:
    p, se = bridge_exceedance(w_a, w_b, length, y, n, depth, seed)
    return CheckResult.upper(
        f"bridge_max(w_a={w_a},w_b={w_b},len={length},y={y})",
        p,
        bridge_max_survival(w_a, w_b, length, y),
        se,
        f"n={n} depth={depth}",
    )


def running_max_excess_frequency(a: float, b: float, delta: float, n: int, depth: int = 10, seed: int = 0, chunk: int = 2_000) -> tuple[float, float]:
    """Frequency of ``max_{[a, b]} W > max(W_a, W_b) + eta(b - a)`` on a depth-``depth`` grid of [0, 1]."""
    m = 1 << depth
    ia, ib = round(a * m), round(b * m)
    if not (ia / m == a and ib / m == b and 0 <= ia < ib <= m):
        raise ValueError("a, b must lie on the grid with a < b")
    e = eta(b - a, delta)
    seeds = rng.fold(seed, 0xD1, np.arange(n, dtype=np.uint64))
    hits = 0
    for i in range(0, n, chunk):
        g = grid_batch(seeds[i : i + chunk], depth)[:, ia : ib + 1]
        hits += int(np.count_nonzero(g.max(axis=1) > np.maximum(g[:, 0], g[:, -1]) + e))
    return _freq(hits, n)


def check_running_max_excess(a: float, b: float, delta: float, n: int, depth: int = 10, seed: int = 0) -> CheckResult:
    p, se = running_max_excess_frequency(a, b, delta, n, depth, seed)
    return CheckResult.upper(f"running_max_excess(a={a},b={b},delta={delta})", p, (delta * (b - a)) ** 5, se, f"n={n} depth={depth}")


# --- gap conditioned on rare events ---------------------------------------------


@dataclass(frozen=True)
class GapReport:
    quantiles: tuple[float, ...]
    probabilities: tuple[float, ...]
    conditional_means: tuple[float, ...]
    unconditional_mean: float
    slope: float
    intercept: float
    loglog_exponent: float


def check_gap_bound(gaps: np.ndarray, quantiles=(0.5, 0.9, 0.99)) -> GapReport:
    """``E[Gap | A]`` for the events ``A = {Gap > q-quantile}``.

    Regresses the conditional means on ``sqrt(log(1 / P[A]))``.  ``slope`` is
    the affine fit (mean = intercept + slope * s); ``loglog_exponent`` fits
    mean = c * s ** p instead.  An empty ``quantiles`` gives only the
    unconditional mean.
    """
    gaps = np.asarray(gaps, dtype=float)
    probs, means = [], []
    for q in quantiles:
        a = gaps > np.quantile(gaps, q)
        probs.append(float(a.mean()))
        means.append(float(gaps[a].mean()))
    if len(quantiles) >= 2:
        s = np.sqrt(np.log(1.0 / np.array(probs)))
        slope, icpt = np.polyfit(s, means, 1)
        expo = float(np.polyfit(np.log(s), np.log(means), 1)[0])
    else:
        slope = icpt = expo = float("nan")
    return GapReport(tuple(quantiles), tuple(probs), tuple(means), float(gaps.mean()), float(slope), float(icpt), expo)


def path_gaps(n: int, depth: int = 14, seed: int = 0, chunk: int = 2_000) -> np.ndarray:
    seeds = rng.fold(seed, 0x6A, np.arange(n, dtype=np.uint64))
    out = []
    for i in range(0, n, chunk):
        g = grid_batch(seeds[i : i + chunk], depth)
        out.append(g.max(axis=1) - g.min(axis=1))
    return np.concatenate(out)
