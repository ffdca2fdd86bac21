import math
import warnings

import numpy as np
import pytest

from bmopt.bm_core import DyadicPath, DyadicPoint, path_max
from bmopt.lemma_verify import (
    CheckResult,
    bridge_exceedance,
    check_event_M,
    check_gap_bound,
    count_near_optimal,
    count_near_optimal_batch,
    epoch_regret_violations,
    near_optimal_bound,
    path_gaps,
    running_max_excess_frequency,
    running_max_ks,
)
from bmopt.noisy_oracle import NoisyOracle
from bmopt.optimizer import ConfidenceParams, RunTrace, Segment, run


def zero_noise_run(seed, T=3_000, delta=0.3):
    path = DyadicPath(seed)
    trace = run(NoisyOracle(path, 0.0, T), ConfidenceParams(delta, 0.0))
    return path, trace


# --- event M ---------------------------------------------------------------------


@pytest.mark.parametrize("seed", range(5))
def test_zero_noise_averages_are_exact(seed):
    path, trace = zero_noise_run(seed)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        rep = check_event_M(path, trace, 0.3, trace.epochs[-1].h)
    assert rep.m2


@pytest.mark.parametrize("seed", range(20))
def test_implications_hold_per_run(seed):
    path = DyadicPath(seed)
    trace = run(NoisyOracle(path, 0.5, 5_000, noise_seed=seed), ConfidenceParams(0.2, 0.5))
    rep = check_event_M(path, trace, 0.2, 8)
    if rep.m2 and rep.c_event:
        assert rep.m3
    if rep.m2 and rep.c_prime:
        assert rep.m4
    assert rep.m == (rep.m1 and rep.m2 and rep.m3 and rep.m4)


def test_large_delta_warns():
    path, trace = zero_noise_run(1, T=200, delta=0.4)
    with pytest.warns(UserWarning):
        check_event_M(path, trace, 0.4, 2)


def test_check_depth_errors():
    path, trace = zero_noise_run(1, T=200)
    with pytest.raises(ValueError):
        check_event_M(path, trace, 0.2, 30)
    with pytest.raises(ValueError):
        check_event_M(path, trace, 0.2, 4, grid_depth=3)
    with pytest.raises(ValueError):
        check_event_M(path, trace, 1.5, 4)


def test_epoch_regret_violations():
    path = DyadicPath(4)
    best = path_max(path, 12).argmax
    ok = RunTrace(10, ConfidenceParams(0.1, 0.5), segments=[Segment(best, 10, 5)])
    assert epoch_regret_violations(path, ok, 12) == []
    worst = DyadicPoint(12, int(np.argmin(path.grid(12))))
    # a huge epoch index makes the allowance tiny
    bad = RunTrace(1, ConfidenceParams(0.1, 0.5), segments=[Segment(worst, 1, 40)])
    [(h, r, b)] = epoch_regret_violations(path, bad, 12)
    assert h == 40 and r > b


# --- near-optimal counting -------------------------------------------------------


@pytest.mark.parametrize("seed", range(5))
def test_count_extremes(seed):
    path = DyadicPath(seed)
    assert count_near_optimal(path, 6, 0.0) >= 1
    assert count_near_optimal(path, 6, math.inf) == 2**6 + 1


def test_batch_count_matches_single():
    seeds = np.arange(30, dtype=np.uint64)
    got = count_near_optimal_batch(seeds, 6, 0.1, chunk=7)
    assert got.tolist() == [count_near_optimal(DyadicPath(int(s)), 6, 0.1) for s in seeds]


def test_near_optimal_bound_value():
    assert near_optimal_bound(6, 0.1) == pytest.approx(3.84)


# --- distributional helpers ------------------------------------------------------


def test_running_max_small_sample():
    ks, maxima = running_max_ks(500, depth=8, seed=1, chunk=128)
    assert 0 <= ks < 0.1 and maxima.size == 500 and maxima.min() >= 0


def test_bridge_certain_exceedance():
    p, _ = bridge_exceedance(0.0, 0.0, 1.0, 0.0, 500, depth=10)
    assert p > 0.97


def test_excess_requires_grid_endpoints():
    with pytest.raises(ValueError):
        running_max_excess_frequency(0.1, 0.5, 0.3, 10, depth=4)
    p, se = running_max_excess_frequency(0.0, 1.0, 0.5, 200, depth=8)
    assert 0 <= p <= 1 and se >= 0


# --- gap -------------------------------------------------------------------------


def test_full_space_is_unconditional():
    g = path_gaps(1_000, depth=10, seed=2)
    rep = check_gap_bound(g, quantiles=())
    assert rep.unconditional_mean == pytest.approx(g.mean())
    assert math.isnan(rep.slope)


def test_gap_mean_matches_straight_line_sampler():
    n, depth = 5_000, 14
    ours = path_gaps(n, depth=depth, seed=5).mean()
    gen = np.random.default_rng(12345)
    ref = []
    for _ in range(n // 500):
        w = np.zeros((500, (1 << depth) + 1))
        np.cumsum(gen.standard_normal((500, 1 << depth)) * 2.0 ** (-depth / 2), axis=1, out=w[:, 1:])
        ref.append(w.max(axis=1) - w.min(axis=1))
    ref = np.concatenate(ref).mean()
    assert abs(ours / ref - 1) < 0.03


def test_conditional_means_increase():
    rep = check_gap_bound(path_gaps(4_000, depth=10, seed=3))
    assert list(rep.conditional_means) == sorted(rep.conditional_means)
    assert rep.probabilities[0] == pytest.approx(0.5, abs=1e-3)


# --- report rows -----------------------------------------------------------------


def test_check_result_margins():
    up = CheckResult.upper("u", estimate=0.5, bound=0.4, se=0.05)
    assert up.margin == pytest.approx(0.05) and up.passed
    assert not CheckResult.upper("u", 0.6, 0.4, 0.05).passed
    lo = CheckResult.lower("l", estimate=0.3, bound=0.4, se=0.01)
    assert lo.margin == pytest.approx(-0.07) and not lo.passed
    row = CheckResult.interval("i", 1.0, 0.8, 1.2).row()
    assert {"bound", "estimate", "se", "margin"} <= set(row)
