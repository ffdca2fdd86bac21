import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from bmopt import rng
from bmopt.bm_core import (
    DyadicPath,
    DyadicPoint,
    alpha,
    bridge_max_survival,
    eta,
    grid_batch,
    path_max,
    path_new,
    path_value,
)

# 40-digit mpmath evaluations of the closed forms, frozen
ETA_1_1 = 1.3163844238670797
ALPHA_QUARTER_TENTH = 2.3523008270990563
EXP_MINUS_2 = 0.1353352832366127


def points(max_depth=12):
    return st.integers(0, max_depth).flatmap(lambda h: st.builds(DyadicPoint, st.just(h), st.integers(0, 1 << h)))


# --- DyadicPoint -----------------------------------------------------------------


@given(st.integers(0, 20), st.integers(0, 2**20), st.integers(0, 10))
def test_point_canonical_form(h, k, lift):
    k = k % ((1 << h) + 1)
    p = DyadicPoint(h, k)
    q = DyadicPoint(h + lift, k << lift)
    assert p == q and hash(p) == hash(q)
    assert p.fraction == Fraction(k, 1 << h)
    assert p.depth == 0 or p.index % 2 == 1


@given(points(), points())
def test_point_order_matches_fractions(p, q):
    assert (p < q) == (p.fraction < q.fraction)


def test_point_rejects_out_of_range():
    with pytest.raises(ValueError):
        DyadicPoint(2, 5)
    with pytest.raises(ValueError):
        DyadicPoint(-1, 0)
    with pytest.raises(ValueError):
        DyadicPoint.from_fraction(Fraction(1, 3))


# --- paths -----------------------------------------------------------------------


def test_anchor_and_determinism():
    p = path_new(7)
    assert path_value(p, DyadicPoint(0, 0)) == 0.0
    q = path_new(7)
    for pt in [DyadicPoint(5, 3), DyadicPoint(1, 1), DyadicPoint(9, 511)]:
        assert path_value(p, pt) == path_value(q, pt)
        assert path_value(p, pt) == path_value(p, pt)


def test_extended_domain_anchor():
    p = DyadicPath(3, domain=(Fraction(-1, 8), Fraction(15, 8)), anchor=0.0)
    assert p.value_at(Fraction(-1, 8)) == 0.0
    with pytest.raises(ValueError):
        p.value_at(Fraction(2))


def test_degenerate_domain_rejected():
    with pytest.raises(ValueError):
        DyadicPath(1, domain=(0, 0))


@given(st.integers(0, 2**32), st.lists(points(10), min_size=2, max_size=12), st.randoms())
def test_query_order_independence(seed, pts, rnd):
    a = DyadicPath(seed)
    va = {p: a.value(p) for p in pts}
    b = DyadicPath(seed)
    shuffled = list(pts)
    rnd.shuffle(shuffled)
    vb = {p: b.value(p) for p in shuffled}
    assert va == vb


@given(st.integers(0, 2**32), st.integers(1, 10))
def test_lazy_and_grid_routes_agree(seed, depth):
    lazy = DyadicPath(seed)
    vals = [lazy.value(DyadicPoint(depth, k)) for k in range(1 << depth, -1, -1)][::-1]
    assert np.array_equal(np.array(vals), DyadicPath(seed).grid(depth))
    assert np.array_equal(grid_batch([seed], depth)[0], DyadicPath(seed).grid(depth))


def test_grid_extension_matches_fresh_grid():
    p = DyadicPath(5)
    p.grid(4)
    assert np.array_equal(p.grid(9), DyadicPath(5).grid(9))


def test_endpoint_law():
    # W(1) ~ N(0, 1) over 10^5 seeds
    w1 = grid_batch(np.arange(100_000), 0)[:, 1]
    assert abs(w1.mean()) < 0.02
    assert abs(w1.var() - 1) < 0.03


def test_midpoint_bridge_law():
    g = grid_batch(np.arange(100_000) + 7_000_000, 1)
    resid = g[:, 1] - 0.5 * (g[:, 0] + g[:, 2])
    assert abs(resid.var() / 0.25 - 1) < 0.02
    assert abs(resid.mean()) < 0.01


def test_bridge_residual_normality_at_depth():
    # cell [3/8, 4/8] at depth 3, midpoint at depth 4
    g = grid_batch(np.arange(10_000) + 123_456, 4)
    z = (g[:, 7] - 0.5 * (g[:, 6] + g[:, 8])) / math.sqrt((1 / 8) / 4)
    assert stats.kstest(z, "norm").statistic < 0.02


def test_bridge_midpoint_mean_is_interpolation():
    # endpoints 2 and 4: conditional mean 3, via the refinement formula
    from bmopt.bm_core import _refine

    coarse = np.array([[2.0, 4.0]] * 50_000)
    keys = rng.fold(np.arange(50_000, dtype=np.uint64), 99)
    fine = _refine(coarse, keys, 1, 1.0)
    assert abs(fine[:, 1].mean() - 3.0) < 0.01


def test_path_max_refinement_monotone():
    p = DyadicPath(11)
    maxima = [path_max(p, d).value for d in range(1, 15)]
    assert all(b >= a for a, b in zip(maxima, maxima[1:]))
    m = path_max(p, 14)
    assert p.value(m.argmax) == m.value
    with pytest.raises(ValueError):
        path_max(p, 0)
    with pytest.raises(ValueError):
        path_max(p, 30)


def test_path_max_finds_spike():
    class Spiky(DyadicPath):
        def grid(self, depth):
            g = np.full((1 << depth) + 1, -1.0)
            g[0] = 0.0
            g[5] = 3.0
            return g

    m = path_max(Spiky(0), 4)
    assert m.argmax == DyadicPoint(4, 5) and m.value == 3.0


# --- confidence functions ----------------------------------------------------------


def test_eta_alpha_against_mpmath():
    assert eta(1, 1) == pytest.approx(ETA_1_1, abs=1e-12)
    assert alpha(0.25, 0.1) == pytest.approx(ALPHA_QUARTER_TENTH, abs=1e-12)
    # the rounded figures quoted alongside these examples agree to ~1e-4
    assert eta(1, 1) == pytest.approx(1.31625, abs=2e-4)
    assert alpha(0.25, 0.1) == pytest.approx(2.35243, abs=2e-4)


def test_eta_alpha_vanish_at_zero():
    xs = [2.0**-k for k in (10, 20, 30, 40)]
    for f in (eta, alpha):
        v = [f(x, 0.1) for x in xs]
        assert all(b < a for a, b in zip(v, v[1:])) and v[-1] < 1e-4


@pytest.mark.parametrize("f,x,d", [(alpha, 1.0, 1.0), (eta, 1.0, 2.5), (eta, 1.0, 2.0), (eta, 0.0, 0.1), (alpha, 1.5, 0.1), (eta, 0.5, 0.0)])
def test_log_domain_errors(f, x, d):
    with pytest.raises(ValueError):
        f(x, d)


def test_bridge_max_survival_examples():
    assert bridge_max_survival(0, 0, 1, 1) == pytest.approx(EXP_MINUS_2, abs=1e-15)
    assert bridge_max_survival(0.3, -0.2, 1.0, 0.3) == 1.0
    assert bridge_max_survival(1.0, 2.0, 1.0, 0.5) == 1.0
    assert bridge_max_survival(0, 0, 2, 1) > bridge_max_survival(0, 0, 1, 1)
    with pytest.raises(ValueError):
        bridge_max_survival(0, 0, 0, 1)


def test_bridge_max_survival_monte_carlo_depth16():
    # bridge from 0 to 0 on [0, 1]: W - x W(1)
    n, hits = 4_000, 0
    x = np.linspace(0, 1, (1 << 16) + 1)
    for lo in range(0, n, 500):
        g = grid_batch(np.arange(lo, lo + 500) + 555, 16)
        hits += int(np.count_nonzero((g - x * g[:, -1:]).max(axis=1) > 1.0))
    p = hits / n
    se = math.sqrt(p * (1 - p) / n)
    assert p <= EXP_MINUS_2 + 3 * se
    assert p >= EXP_MINUS_2 - 0.03
