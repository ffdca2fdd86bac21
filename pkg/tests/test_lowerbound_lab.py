import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bmopt.bm_core import DyadicPoint
from bmopt.lowerbound_lab import (
    C3,
    MINUS,
    PLUS,
    PairGrid,
    RunTrace,
    binary_entropy,
    check_event_T,
    event_t_bound,
    fano_floor,
    genie,
    hypothesis_test_regret,
    inverse_binary_entropy,
    make_pair,
    mi_ceiling,
    mi_surrogate,
    random_search,
    sample_meanders,
    shift_for_budget,
)
from bmopt.optimizer import ConfidenceParams, Segment

SHIFT = Fraction(1, 64)
DEPTH = 10


def synthetic_equal(pair, depth):
    g = pair.grid(depth)
    pair._grids[depth] = PairGrid(depth, g.w_plus, g.w_plus.copy(), g.r_plus, g.r_plus.copy(), g.x_max, g.max_value)
    return pair


def trace_of(segments):
    return RunTrace(budget=sum(s.count for s in segments), params=ConfidenceParams(0.5, 0.5), segments=segments)


# --- construction ----------------------------------------------------------------


@pytest.mark.parametrize("seed", range(20))
def test_plus_starts_at_zero(seed):
    pair = make_pair(seed, SHIFT, DEPTH)
    assert pair.w_plus(0) == 0.0
    assert pair.grid().w_plus[0] == 0.0
    assert pair.w_minus(0) == 0.0 and pair.grid().w_minus[0] == 0.0


def test_label_frequency():
    labels = [make_pair(s, SHIFT, DEPTH).label for s in range(10_000)]
    assert abs(labels.count(PLUS) / 10_000 - 0.5) < 0.015


@pytest.mark.parametrize("seed", range(5))
def test_regret_functions_are_shifts(seed):
    g = make_pair(seed, SHIFT, DEPTH).grid()
    m = int(SHIFT * (1 << DEPTH))
    assert np.array_equal(g.r_minus[2 * m :], g.r_plus[: -2 * m])
    assert g.r_plus.min() >= 0 and g.r_minus.min() >= 0


@pytest.mark.parametrize("seed", range(3))
def test_views_match_grid(seed):
    pair = make_pair(seed, SHIFT, DEPTH)
    g = pair.grid()
    for k in (0, 1, 77, 512, 1024):
        p = DyadicPoint(DEPTH, k)
        assert pair.view(PLUS).value(p) == g.w_plus[k]
        assert pair.view(MINUS).value(p) == g.w_minus[k]


def test_shift_validation():
    for bad in (Fraction(1, 3), Fraction(1, 2), Fraction(0), Fraction(-1, 4)):
        with pytest.raises(ValueError):
            make_pair(0, bad, DEPTH)
    with pytest.raises(ValueError):
        make_pair(0, Fraction(1, 2048), DEPTH)


def test_shift_schedule():
    assert shift_for_budget(1_000) == Fraction(1, 4096)
    for T in (100, 1_000, 10_000, 100_000):
        d = shift_for_budget(T)
        target = 2.771 / (T * math.log(T))
        assert d <= target < 2 * d


# --- event T ---------------------------------------------------------------------


@pytest.mark.parametrize("shift", [Fraction(1, 4), Fraction(3, 8)])
def test_large_shift_breaks_interior_event(shift):
    assert not any(check_event_T(make_pair(s, shift, 8), 0.5, 8).t1 for s in range(200))


@pytest.mark.parametrize("seed", range(10))
def test_equal_regrets_certify_third_event(seed):
    pair = synthetic_equal(make_pair(seed, SHIFT, DEPTH), DEPTH)
    rep = check_event_T(pair, 0.5, DEPTH)
    assert rep.t3 and rep.max_regret_gap == 0.0


def test_event_t_bound_value():
    d = 2.0**-10
    assert event_t_bound(Fraction(1, 1024), 0.5, 0.4) == pytest.approx(1 - 3 * d**0.4 - 0.5 - d)


# --- information surrogate and Fano floor ----------------------------------------


def test_surrogate_zero_for_equal_regrets():
    pair = synthetic_equal(make_pair(1, SHIFT, DEPTH), DEPTH)
    tr = trace_of([Segment(DyadicPoint(DEPTH, k), 3, 0) for k in (5, 100, 900)])
    assert mi_surrogate(pair, tr, 0.5, DEPTH) == 0.0


@pytest.mark.parametrize("s2", [0.25, 0.5, 2.0])
def test_surrogate_single_query(s2):
    pair = make_pair(2, SHIFT, DEPTH)
    g = pair.grid()
    k = 300
    diff = g.r_plus[k] - g.r_minus[k]
    assert mi_surrogate(pair, trace_of([Segment(DyadicPoint(DEPTH, k), 1, 0)]), s2) == pytest.approx(diff**2 / (2 * s2), rel=1e-14)
    with pytest.raises(ValueError):
        mi_surrogate(pair, trace_of([]), 0.0)


def test_fano_floor_examples():
    d = Fraction(1, 1024)
    assert fano_floor(0.0, 0.5, d) == pytest.approx(C3 * 0.25 * math.sqrt(float(d)) * 0.5, rel=1e-10)
    assert fano_floor(math.log(2), 0.5, d) == 0.0
    assert fano_floor(3.0, 0.5, d) == 0.0
    with pytest.raises(ValueError):
        fano_floor(-0.1, 0.5, d)


def test_inverse_entropy_round_trip():
    assert abs(inverse_binary_entropy(binary_entropy(0.11)) - 0.11) < 1e-10
    assert inverse_binary_entropy(math.log(2)) == 0.5
    assert inverse_binary_entropy(0.0) == 0.0


@given(st.floats(0.0, 0.499))
def test_inverse_entropy_any(p):
    assert abs(inverse_binary_entropy(binary_entropy(p)) - p) < 1e-9


def test_floor_decreasing_in_information():
    mis = np.linspace(0, 0.7, 50)
    fl = [fano_floor(m, 0.5, Fraction(1, 1024)) for m in mis]
    assert all(b <= a for a, b in zip(fl, fl[1:]))


# --- algorithms ------------------------------------------------------------------


def test_genie_violates_floor():
    s = hypothesis_test_regret(genie(), Fraction(1, 1024), 1.0, 20, range(60), grid_depth=DEPTH, batch_size=60)
    cert = s.certified_runs
    assert cert and all(r.simple_regret == 0.0 for r in cert)
    assert any(r.floor > 0 for r in cert)
    assert s.batch_pass_fraction == 0.0


def test_random_search_stays_on_grid_and_respects_ceiling():
    s = hypothesis_test_regret(random_search(DEPTH), Fraction(1, 1024), 0.5, 200, range(40), grid_depth=DEPTH, batch_size=20)
    assert len(s.runs) == 40 and len(s.batches()) <= 2
    for r in s.runs:
        assert r.mi >= 0 and r.floor >= 0


def test_mi_ceiling_value():
    d = 2.0**-10
    assert mi_ceiling(1_000, 0.5, Fraction(1, 1024)) == pytest.approx(1_000 * 2.771**2 * d * math.log(1 / d))


# --- meanders --------------------------------------------------------------------


def test_meander_endpoint_is_rayleigh():
    end = sample_meanders(20_000, 6, 1.0, seed=3)[:, -1]
    assert end.min() > 0
    assert abs(end.mean() / math.sqrt(math.pi / 2) - 1) < 0.02
    assert abs(np.mean(end**2) / 2 - 1) < 0.03


def test_meander_prefix_shape():
    w = sample_meanders(10, 8, 2.0, seed=1, upto=0.25)
    assert w.shape == (10, 65) and np.all(w[:, 0] == 0) and np.all(w[:, 1:] > 0)
    with pytest.raises(ValueError):
        sample_meanders(10, 4, 1.0, seed=1, upto=0.01)
