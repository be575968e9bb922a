"""Tests for series tails, coefficients, asymptotics and gauges.

Frozen constants were computed with 40-digit mpmath partial sums of the
defining series (for tails) and adaptive quadrature (for constants); the
multinomial coefficient oracle below recomputes c_n from scratch by
explicit integer partitions, independent of the production recurrence.
"""

import math
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stabletrees.errors import DomainError
from stabletrees.index import StableIndex
from stabletrees import tails

LN2_TWICE = 1.3862943611198906
C_15 = 0.7410187508850556


# ---------------------------------------------------------------------------
# C_gamma
# ---------------------------------------------------------------------------

class TestCGamma:
    def test_brownian_closed_form_both_methods(self, idx2):
        assert tails.c_gamma_quadrature(idx2) == pytest.approx(LN2_TWICE, abs=1e-12)
        val, tail = tails.c_gamma_series(idx2)
        assert val == pytest.approx(LN2_TWICE, abs=1e-12)
        assert tail < 1e-12

    def test_gamma_15_dual_agreement(self, idx15):
        q = tails.c_gamma_quadrature(idx15)
        s, tail = tails.c_gamma_series(idx15)
        assert q == pytest.approx(C_15, abs=1e-12)
        assert abs(q - s) <= 1e-10 + tail

    def test_near_one_is_small(self):
        assert tails.c_gamma_quadrature(StableIndex(1.01)) == \
            pytest.approx(0.016405373627416845, rel=1e-8)

    def test_gate(self, idx2):
        assert tails.c_gamma(idx2, tol=1e-10) == pytest.approx(LN2_TWICE, abs=1e-11)


# ---------------------------------------------------------------------------
# coefficients
# ---------------------------------------------------------------------------

def _partitions(n):
    """All multiplicity vectors {part: count} with sum(part*count) = n."""
    def gen(n, maxpart):
        if n == 0:
            yield {}
            return
        for i in range(min(n, maxpart), 0, -1):
            for rest in gen(n - i, i):
                d = dict(rest)
                d[i] = d.get(i, 0) + 1
                yield d
    yield from gen(n, n)


def _c_multinomial(a, n):
    """c_n = sum over partitions of prod (-a_i)^{p_i} / p_i! -- the direct
    multinomial expansion of exp(-h(y))."""
    total = 0.0
    for p in _partitions(n):
        term = 1.0
        for i, pi in p.items():
            term *= (-a[i]) ** pi / math.factorial(pi)
        total += term
    return total


class TestExpansionCoeffs:
    def test_a1_brownian(self, idx2):
        table = tails.expansion_coeffs(idx2, 4)
        assert table.a[1] == pytest.approx(0.5, rel=1e-15)

    def test_c1_is_minus_a1(self, idx15):
        table = tails.expansion_coeffs(idx15, 4)
        assert table.c[1] == pytest.approx(-table.a[1], rel=1e-15)

    @pytest.mark.parametrize("gamma", [1.2, 1.5, 1.8, 2.0])
    def test_recurrence_matches_multinomial(self, gamma):
        table = tails.expansion_coeffs(StableIndex(gamma), 8)
        for n in range(1, 9):
            assert table.c[n] == pytest.approx(_c_multinomial(table.a, n), abs=1e-14)

    @pytest.mark.parametrize("gamma", [1.5, 2.0])
    def test_coefficient_sum_bound(self, gamma):
        table = tails.expansion_coeffs(StableIndex(gamma), 200)
        assert np.abs(table.c).sum() <= math.exp(table.C_gamma)

    def test_a_in_unit_interval(self, idx15):
        table = tails.expansion_coeffs(idx15, 300)
        assert ((table.a[1:] > 0) & (table.a[1:] < 1)).all()

    def test_a_partial_sums_approach_c_gamma(self, idx15):
        table = tails.expansion_coeffs(idx15, 3000)
        partial = np.cumsum(table.a[1:])
        assert (np.diff(partial) > 0).all()
        assert partial[-1] < table.C_gamma
        # tail of sum a_n ~ gamma N^(-1/gamma) / Gamma(1-1/gamma): ~2.7e-3 here
        assert table.C_gamma - partial[-1] < 0.004


# ---------------------------------------------------------------------------
# small-ball asymptotics and the stable CDF
# ---------------------------------------------------------------------------

class TestSmallBall:
    def test_brownian_value(self, idx2):
        assert tails.small_ball_asymptotic(idx2, 0.1) == \
            pytest.approx(3.2399643824356469e-05, rel=1e-12)

    def test_vanishes_at_zero(self, idx2):
        assert tails.small_ball_asymptotic(idx2, 1e-3) < 1e-300

    def test_variant_ratio(self, idx15):
        c = tails.c_gamma_quadrature(idx15)
        for y in (0.05, 0.3, 0.9):
            ratio = tails.small_ball_asymptotic(idx15, y, "mass") / \
                tails.small_ball_asymptotic(idx15, y, "stable")
            assert ratio == pytest.approx(math.exp(c), rel=1e-13)

    def test_domain(self, idx2):
        with pytest.raises(DomainError):
            tails.small_ball_asymptotic(idx2, 1.5)


class TestStableCdf:
    def test_erfc_value(self):
        assert tails.stable_cdf_gamma2(1.0) == pytest.approx(0.15729920705028513, rel=1e-14)

    def test_limits(self):
        # CDF -> 1 like 1 - 2/sqrt(pi y)
        assert tails.stable_cdf_gamma2(1e8) == pytest.approx(1.0, abs=1.2e-4)
        assert tails.stable_cdf_gamma2(1e6) < tails.stable_cdf_gamma2(1e8)
        assert tails.stable_cdf_gamma2(1e-3) >= 0.0

    def test_skorohod_ratio(self, idx2):
        # erfc(z) ~ e^{-z^2}/(z sqrt(pi)) against the printed stable asymptotic
        r = tails.stable_cdf_gamma2(0.05) / tails.small_ball_asymptotic(idx2, 0.05, "stable")
        assert 0.95 <= r <= 1.05
        rs = [tails.stable_cdf_gamma2(y) / tails.small_ball_asymptotic(idx2, y, "stable")
              for y in (0.1, 0.05, 0.02)]
        assert abs(rs[2] - 1.0) < abs(rs[1] - 1.0) < abs(rs[0] - 1.0)


# ---------------------------------------------------------------------------
# Brownian ball tail / CDF
# ---------------------------------------------------------------------------

FROZEN_BALL_TAIL = {
    (0.0, 1.0): 0.16950649902357536,
    (0.0, 5.0): 8.7727667642651883e-06,
    (2.0, 1.0): 0.5639468841234022,
    (2.0, 5.0): 0.16927575254948771,
}


class TestBrownianBallTail:
    @pytest.mark.parametrize("key,expected", sorted(FROZEN_BALL_TAIL.items()))
    def test_frozen(self, key, expected):
        c, y = key
        acc = tails.brownian_ball_tail(c, y)
        assert acc.value == pytest.approx(expected, rel=1e-10)
        assert abs(acc.value - expected) <= acc.remainder_bound + 1e-12

    def test_total_probability_small_y(self):
        acc = tails.brownian_ball_tail(0.0, 1e-3)
        assert acc.value == pytest.approx(1.0, abs=1e-9)

    def test_large_y_asymptotic(self):
        for c in (0.0, 2.0):
            y = 40.0 * (1 + c) ** 2 / math.pi ** 2
            lead = 2.0 / (1 + c) * math.exp(-math.pi ** 2 * y / (4 * (1 + c) ** 2))
            assert tails.brownian_ball_tail(c, y).value / lead == \
                pytest.approx(1.0, abs=1e-3)

    def test_dual_vs_direct_at_crossover(self):
        # the modular identity, checked where both representations converge
        for c in (0.0, 1.0, 2.0):
            for y in (0.55, 0.8, 1.0):
                direct = tails.brownian_ball_tail(c, y, 1e-15).value
                dual = 1.0 - tails._ball_cdf_dual(c, y)
                assert direct == pytest.approx(dual, abs=1e-12)

    def test_domain(self):
        with pytest.raises(DomainError):
            tails.brownian_ball_tail(0.0, 0.0)
        with pytest.raises(DomainError):
            tails.brownian_ball_tail(-0.5, 1.0)


class TestBrownianBallCdf:
    def test_complement(self):
        for c in (0.0, 2.0):
            for y in (0.2, 0.7, 1.8):
                s = tails.brownian_ball_cdf(c, y).value + tails.brownian_ball_tail(c, y).value
                assert s == pytest.approx(1.0, abs=1e-11)

    def test_deep_left_tail_positive(self):
        v = tails.brownian_ball_cdf(0.0, 0.01).value
        assert 0.0 < v < 1e-40


# ---------------------------------------------------------------------------
# Brownian spinal-mass tail / CDF
# ---------------------------------------------------------------------------

class TestBrownianMstar:
    def test_tail_frozen(self):
        assert tails.brownian_mstar_tail(1.0).value == \
            pytest.approx(0.4079602123286323, rel=1e-12)
        assert tails.brownian_mstar_tail(0.5).value == \
            pytest.approx(0.8185056606058127, rel=1e-12)
        assert tails.brownian_mstar_tail(2.0).value == \
            pytest.approx(0.06336458792045057, rel=1e-12)

    def test_tail_normalization(self):
        assert tails.brownian_mstar_tail(1e-3).value == pytest.approx(1.0, abs=1e-6)

    def test_tail_asymptotic(self):
        y = 20.0
        assert tails.brownian_mstar_tail(y).value / (4 * y * math.exp(-math.pi ** 2 * y / 4)) \
            == pytest.approx(1.0, abs=2e-2)

    def test_cdf_complement_consistency(self):
        for y in np.linspace(0.1, 1.0, 10):
            s = tails.brownian_mstar_tail(float(y)).value + \
                tails.brownian_mstar_cdf_small(float(y))
            assert s == pytest.approx(1.0, abs=1e-10)

    def test_cdf_frozen(self):
        assert tails.brownian_mstar_cdf_small(1.0) == \
            pytest.approx(0.5920397876713677, rel=1e-10)
        assert tails.brownian_mstar_cdf_small(0.2) == \
            pytest.approx(0.0062616070003073272, rel=1e-10)
        assert tails.brownian_mstar_cdf_small(0.08) == \
            pytest.approx(2.2932125750335512e-06, rel=1e-10)
        assert tails.brownian_mstar_cdf_small(0.05) == \
            pytest.approx(1.0158514357883460e-09, rel=1e-10)

    def test_cdf_monotone_to_zero(self):
        ys = np.geomspace(0.02, 0.8, 24)
        vals = [tails.brownian_mstar_cdf_small(float(y)) for y in ys]
        assert all(x < y for x, y in zip(vals, vals[1:]))
        assert vals[0] < 1e-20

    def test_masszero_ratio(self, idx2):
        for y in (0.08, 0.05):
            ratio = tails.brownian_mstar_cdf_small(y) / tails.small_ball_asymptotic(idx2, y)
            assert 0.9 <= ratio <= 1.1


# ---------------------------------------------------------------------------
# fixed point, gauges, de Bruijn
# ---------------------------------------------------------------------------

class TestFixedPoint:
    def test_brownian(self, idx2):
        assert tails.fixed_point_residual(idx2, 1.0, 50) <= 1e-8

    def test_gamma_15(self, idx15):
        assert tails.fixed_point_residual(idx15, 2.0, 100) <= 1e-6

    def test_vanishes_at_large_lambda(self, idx15):
        rs = [tails.fixed_point_residual(idx15, lam, 60) for lam in (1.0, 10.0, 100.0)]
        assert rs[-1] < 1e-12


class TestGauges:
    def test_f_brownian_at_inv_e(self):
        assert tails.gauge_eval("f_brownian", None, 0.3678794) == \
            pytest.approx(math.exp(-2.0), rel=1e-5)

    def test_g_gamma_log_log_one(self, idx2):
        r = math.exp(-math.e)
        assert tails.gauge_eval("g_gamma", idx2, r) == pytest.approx(r * r, rel=1e-12)

    def test_f_gamma_brownian_point(self, idx2):
        r = 1.0 / math.e
        assert tails.gauge_eval("f_gamma", idx2, r) == pytest.approx(math.exp(-2.0), rel=1e-12)

    @pytest.mark.parametrize("kind,r", [
        ("g_gamma", 0.5), ("g_brownian", 0.9), ("f_gamma", 1.0), ("f_brownian", 1.2),
        ("f_gamma", 0.0),
    ])
    def test_domains(self, idx2, kind, r):
        with pytest.raises(DomainError):
            tails.gauge_eval(kind, idx2, r)

    def test_unknown_kind(self, idx2):
        with pytest.raises(DomainError):
            tails.gauge_eval("h_gamma", idx2, 0.1)


class TestDeBruijn:
    def test_brownian_band(self, idx2):
        for c in (0.0, 2.0):
            assert 0.9 <= tails.debruijn_ratio(idx2, c, 0.01) <= 1.1

    def test_trend_toward_one(self, idx2):
        rs = [tails.debruijn_ratio(idx2, 0.0, y) for y in (0.02, 0.01, 0.005)]
        assert abs(rs[2] - 1.0) < abs(rs[1] - 1.0) < abs(rs[0] - 1.0)

    def test_far_below_underflow(self, idx2):
        # log-CDF path must survive y where the CDF itself underflows
        r = tails.debruijn_ratio(idx2, 0.0, 1e-4)
        assert 0.99 <= r <= 1.01

    def test_general_gamma_route(self, idx15):
        # gamma=1.5 goes through the numeric inversion; convergence of the
        # Tauberian ratio is logarithmically slow, so assert the climb
        rs = [tails.debruijn_ratio(idx15, 0.0, y) for y in (0.02, 0.01, 0.005, 0.002)]
        assert all(0.0 < x < y for x, y in zip(rs, rs[1:]))
        assert rs[-1] > 0.65


# ---------------------------------------------------------------------------
# property tests
# ---------------------------------------------------------------------------

@settings(max_examples=40, deadline=None)
@given(st.floats(0.01, 30.0), st.floats(0.0, 3.0))
def test_tail_probability_bounds(y, c):
    t = tails.brownian_ball_tail(c, y).value
    assert -1e-12 <= t <= 1.0 + 1e-12
    m = tails.brownian_mstar_tail(y).value
    assert 0.0 <= m <= 1.0


@settings(max_examples=30, deadline=None)
@given(st.floats(0.02, 10.0), st.floats(0.02, 10.0), st.floats(0.0, 2.0))
def test_tails_nonincreasing(y1, y2, c):
    lo, hi = sorted((y1, y2))
    assert tails.brownian_ball_tail(c, lo).value >= \
        tails.brownian_ball_tail(c, hi).value - 1e-11
    assert tails.brownian_mstar_cdf_small(lo) <= tails.brownian_mstar_cdf_small(hi) + 1e-12
