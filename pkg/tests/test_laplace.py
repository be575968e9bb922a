"""Tests for the dual-method Laplace inversion and CDF tables."""

import math

import mpmath as mp
import numpy as np
import pytest

from stabletrees.errors import ConfigurationError, DomainError, InversionDisagreementError
from stabletrees.index import StableIndex
from stabletrees import kappa as kp
from stabletrees import laplace, tails


def _unit_handle():
    """Transform of the unit mass at 0: t(lam) = 1."""
    return kp.TransformHandle(
        name="unit", eval=lambda lam: 1.0, closed_form=True,
        analytic_continuation=True,
        eval_complex=lambda lam: 1.0 + 0.0j,
        eval_mp=lambda lam, dps=40: mp.mpf(1),
        index=StableIndex(2.0),
    )


class TestInvertAt:
    def test_mstar_vs_series(self, idx2):
        h = kp.mstar_transform(idx2)
        for y in (0.1, 0.5, 1.0, 3.0):
            inv = laplace.invert_cdf_at(h, y)
            assert inv == pytest.approx(tails.brownian_mstar_cdf_small(y), abs=1e-6)

    def test_levy_vs_erfc(self, idx2):
        h = kp.stable_law_transform(idx2)
        for y in (0.3, 1.0, 4.0):
            assert laplace.invert_cdf_at(h, y) == \
                pytest.approx(tails.stable_cdf_gamma2(y), abs=1e-6)

    def test_unit_mass(self):
        for y in (0.2, 1.0, 7.0):
            assert laplace.invert_cdf_at(_unit_handle(), y) == pytest.approx(1.0, abs=1e-7)

    def test_disagreement_raises(self, idx2):
        # a transform that lies to the real-axis channel only
        good = kp.mstar_transform(idx2)
        bad = kp.TransformHandle(
            name="two-faced", eval=good.eval, analytic_continuation=True,
            eval_complex=good.eval_complex,
            eval_mp=lambda lam, dps=40: good.eval_mp(lam, dps) * mp.mpf("1.001"),
            index=idx2)
        with pytest.raises(InversionDisagreementError) as err:
            laplace.invert_cdf_at(bad, 1.0)
        assert "contour" in err.value.detail and "real_axis" in err.value.detail

    def test_domain(self, idx2):
        with pytest.raises(DomainError):
            laplace.invert_cdf_at(kp.mstar_transform(idx2), 0.0)


class TestGaverStehfest:
    def test_extended_precision_accuracy(self, idx2):
        h = kp.mstar_transform(idx2)
        for y in (0.1, 1.0, 5.0):
            assert laplace.gaver_stehfest_value(h, y) == \
                pytest.approx(tails.brownian_mstar_cdf_small(y), abs=5e-8)

    def test_double_precision_fallback(self, idx2):
        h = kp.TransformHandle(name="no-mp", eval=kp.mstar_transform(idx2).eval,
                               index=idx2)
        assert laplace.gaver_stehfest_value(h, 1.0) == \
            pytest.approx(tails.brownian_mstar_cdf_small(1.0), abs=5e-4)


class TestPava:
    def test_identity_when_monotone(self):
        v = np.array([0.0, 0.1, 0.4, 0.9, 1.0])
        assert np.array_equal(laplace._pava_nondecreasing(v), v)

    def test_projects_violations(self):
        v = np.array([0.0, 0.3, 0.2, 0.9])
        out = laplace._pava_nondecreasing(v)
        assert (np.diff(out) >= 0).all()
        assert out[1] == out[2] == pytest.approx(0.25)


class TestBuildTable:
    def test_brownian_table_matches_series(self, idx2):
        table = laplace.build_cdf_table(kp.mstar_transform(idx2), 0.05, 8.0, 64)
        series = np.array([tails.brownian_mstar_cdf_small(float(y)) for y in table.grid])
        assert np.max(np.abs(table.cdf - series)) <= 1e-6
        assert table.max_abs_disagreement <= 1e-6

    def test_interpolant_monotone_on_refined_grid(self, idx2):
        table = laplace.build_cdf_table(kp.mstar_transform(idx2), 0.05, 8.0, 32)
        fine = np.geomspace(0.05, 8.0, 321)
        vals = table.cdf_at(fine)
        assert (np.diff(vals) >= -1e-12).all()
        assert vals[0] >= 0.0 and vals[-1] <= 1.0

    def test_gamma_15_table(self, table15):
        # survival at the right edge is the Tauberian power tail ~ y^-1/2
        assert table15.method == "talbot+gaver-stehfest"
        assert 0.75 <= float(table15.cdf_at(np.array([8.0]))[0]) <= 0.85
        assert table15.max_abs_disagreement <= 1e-6

    def test_tail_extensions_continuous(self, table15):
        g = table15.grid
        eps = 1e-9
        # both tails must join the table without jumps
        low = table15.cdf_at(np.array([g[0] * (1 - eps), g[0]]))
        high = table15.cdf_at(np.array([g[-1], g[-1] * (1 + eps)]))
        assert abs(low[1] - low[0]) < 1e-8
        assert abs(high[1] - high[0]) < 1e-8

    def test_ppf_roundtrip(self, table15):
        u = np.array([1e-4, 0.05, 0.3, 0.7, 0.99, 0.9999])
        y = table15.ppf(u)
        assert (np.diff(y) > 0).all()
        assert np.allclose(table15.cdf_at(y), u, atol=2e-4)

    def test_ppf_analytic_tails(self, idx2):
        # a deliberately narrow table so both analytic tail inversions fire
        table = laplace.build_cdf_table(kp.mstar_transform(idx2), 0.5, 3.0, 24)
        lo, hi = table.cdf[0], table.cdf[-1]
        assert lo > 0.1 and hi < 0.999
        u = np.array([0.02, lo / 2, hi + (1 - hi) / 2, 0.9995])
        y = table.ppf(u)
        assert y[0] < y[1] < table.grid[0]
        assert y[2] > table.grid[-1]
        assert np.allclose(table.cdf_at(y), u, rtol=1e-6, atol=1e-9)

    def test_csv_roundtrip(self, idx2, tmp_path):
        table = laplace.build_cdf_table(kp.mstar_transform(idx2), 0.1, 4.0, 24)
        path = tmp_path / "t.csv"
        table.to_csv(path)
        back = laplace.CdfTable.from_csv(path)
        assert np.array_equal(back.grid, table.grid)
        assert np.array_equal(back.cdf, table.cdf)
        assert back.gamma == 2.0
        assert back.method == table.method

    def test_needs_index(self, idx2):
        h = kp.TransformHandle(name="anon", eval=lambda lam: math.exp(-lam))
        with pytest.raises(ConfigurationError):
            laplace.build_cdf_table(h, 0.1, 1.0, 16)

    def test_bad_grid(self, idx2):
        with pytest.raises(DomainError):
            laplace.build_cdf_table(kp.mstar_transform(idx2), 1.0, 0.5, 32)
        with pytest.raises(DomainError):
            laplace.build_cdf_table(kp.mstar_transform(idx2), 0.1, 1.0, 8)


class TestTalbotSuppression:
    def test_brownian_phi_matches_series_small_y(self, idx2):
        # small y drives contour nodes deep into the left half plane where
        # the suppression rule must not disturb the result
        h = kp.ball_mass_transform(idx2, 2.0)
        for y in (0.05, 0.08):
            inv = laplace.talbot_value(h, y)
            assert inv == pytest.approx(tails.brownian_ball_cdf(2.0, y).value, abs=1e-8)
