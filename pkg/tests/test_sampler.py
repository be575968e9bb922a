"""Tests for the reproducible samplers.

MC assertions use 3-standard-error bands at fixed seeds; every sampler is
checked against its defining Laplace transform, and heavy-tailed cases
(gamma < 2) only ever through bounded functionals.
"""

import math

import numpy as np
import pytest

from stabletrees.errors import ConfigurationError, DomainError
from stabletrees import kappa as kp
from stabletrees import sampler, stats, tails

N = 100_000


class TestRngStream:
    def test_reproducible(self):
        a = sampler.RngStream(5, 1).generator().random(8)
        b = sampler.RngStream(5, 1).generator().random(8)
        assert np.array_equal(a, b)

    def test_streams_differ(self):
        a = sampler.RngStream(5, 1).generator().random(8)
        b = sampler.RngStream(5, 2).generator().random(8)
        assert not np.array_equal(a, b)

    def test_counter_advances(self):
        base = sampler.RngStream(5, 1)
        ahead = sampler.RngStream(5, 1, counter=3)
        assert not np.array_equal(base.generator().random(4),
                                  ahead.generator().random(4))

    def test_validation(self):
        with pytest.raises(DomainError):
            sampler.RngStream(-1)


class TestPositiveStable:
    def test_drift_degenerate(self):
        b = sampler.sample_positive_stable(1.0, 2.0, sampler.RngStream(1), 3)
        assert np.array_equal(b.values, [2.0, 2.0, 2.0])

    def test_transform_check(self):
        b = sampler.sample_positive_stable(0.5, 2.0, sampler.RngStream(2, 7), N)
        emp = np.exp(-b.values)
        se = emp.std(ddof=1) / math.sqrt(N)
        assert abs(emp.mean() - math.exp(-2.0)) <= 3 * se

    def test_cdf_vs_erfc_oracle(self):
        b = sampler.sample_positive_stable(0.5, 2.0, sampler.RngStream(3, 9), N)
        ks = stats.ks_one_sample(
            b.values, lambda y: [tails.stable_cdf_gamma2(v) for v in np.atleast_1d(y)])
        assert ks <= 0.01

    def test_multiple_lambdas(self):
        # E exp(-lam X) = exp(-2 lam^0.6) at lam in {0.5, 1, 2}
        b = sampler.sample_positive_stable(0.6, 2.0, sampler.RngStream(4, 1), N)
        for lam in (0.5, 1.0, 2.0):
            emp = np.exp(-lam * b.values)
            se = emp.std(ddof=1) / math.sqrt(N)
            assert abs(emp.mean() - math.exp(-2.0 * lam ** 0.6)) <= 3 * se

    def test_batch_provenance(self):
        b = sampler.sample_positive_stable(0.5, 1.0, sampler.RngStream(9, 4), 10)
        assert (b.seed, b.stream_id, b.count) == (9, 4, 10)
        assert (b.values >= 0).all()

    def test_rejects_bad_exponent(self):
        with pytest.raises(DomainError):
            sampler.sample_positive_stable(1.2, 1.0, sampler.RngStream(1), 5)


class TestSubordinator:
    def test_brownian_is_exact_drift(self, idx2):
        path = sampler.sample_subordinator_path(
            idx2, np.array([0.0, 1.0, 2.0]), sampler.RngStream(5))
        assert np.array_equal(path, [0.0, 2.0, 4.0])

    def test_transform_gamma_15(self, idx15):
        vals = np.array([
            sampler.sample_subordinator_path(idx15, np.array([0.0, 1.0]),
                                             sampler.RngStream(6, i))[1]
            for i in range(N // 2)])
        emp = np.exp(-vals)
        se = emp.std(ddof=1) / math.sqrt(vals.size)
        assert abs(emp.mean() - math.exp(-1.5)) <= 3 * se

    def test_disjoint_increments_uncorrelated(self, idx15):
        grid = np.array([0.0, 1.0, 2.0])
        inc = np.array([
            np.diff(sampler.sample_subordinator_path(idx15, grid, sampler.RngStream(7, i)))
            for i in range(20_000)])
        # bounded functionals: heavy tails make raw correlation meaningless
        rho = stats.sample_correlation(np.exp(-inc[:, 0]), np.exp(-inc[:, 1]))
        assert abs(rho) <= 3.0 / math.sqrt(inc.shape[0])

    def test_grid_validation(self, idx2):
        with pytest.raises(DomainError):
            sampler.sample_subordinator_path(idx2, np.array([0.5, 1.0]), sampler.RngStream(1))
        with pytest.raises(DomainError):
            sampler.sample_subordinator_path(idx2, np.array([0.0, 1.0, 0.7]), sampler.RngStream(1))


class TestSampleMstar:
    def test_brownian_moments(self, idx2):
        b = sampler.sample_mstar(idx2, sampler.RngStream(11, 0), N)
        se = b.values.std(ddof=1) / math.sqrt(N)
        assert abs(b.values.mean() - 1.0) <= 3 * se
        p = (b.values >= 1.0).mean()
        p_true = 0.4079602123286323
        assert abs(p - p_true) <= 3 * math.sqrt(p_true * (1 - p_true) / N)

    def test_brownian_transform(self, idx2):
        b = sampler.sample_mstar(idx2, sampler.RngStream(12, 0), N)
        emp = np.exp(-b.values)
        se = emp.std(ddof=1) / math.sqrt(N)
        assert abs(emp.mean() - 1.0 / math.cosh(1.0) ** 2) <= 3 * se

    def test_gamma_15_transform(self, idx15, table15):
        b = sampler.sample_mstar(idx15, sampler.RngStream(13, 0), N, table=table15)
        for lam in (0.5, 1.0, 2.0):
            emp = np.exp(-lam * b.values)
            se = emp.std(ddof=1) / math.sqrt(N)
            assert abs(emp.mean() - kp.mstar_transform_value(idx15, lam)) <= 3 * se + 3e-4

    def test_requires_table_off_brownian(self, idx15):
        with pytest.raises(ConfigurationError):
            sampler.sample_mstar(idx15, sampler.RngStream(1), 10)

    def test_wrong_gamma_table_rejected(self, idx2, table15):
        with pytest.raises(ConfigurationError):
            sampler.sample_mstar(idx2, sampler.RngStream(1), 10, table=table15)

    def test_deterministic(self, idx2):
        a = sampler.sample_mstar(idx2, sampler.RngStream(14, 3), 1000)
        b = sampler.sample_mstar(idx2, sampler.RngStream(14, 3), 1000)
        assert np.array_equal(a.values, b.values)


class TestShellMasses:
    def test_zero_width_shell_draws_zero(self, idx2):
        b = sampler.sample_shell_masses(idx2, np.array([1.0, 1.0, 0.5]),
                                        1.0, sampler.RngStream(15))
        assert b.values[0] == 0.0
        assert b.values[1] > 0.0

    def test_marginal_scaling_ks(self, idx2, mstar_table2):
        n = 10_000
        for w in (0.25, 0.5):
            scaled = sampler.sample_single_ball(
                idx2, w, 1.0, sampler.RngStream(16, int(w * 100)), n).values / w ** 2
            ks = stats.ks_one_sample(scaled, mstar_table2.cdf_at)
            assert ks <= 0.02

    def test_pairwise_independence(self, idx2):
        m = 4000
        draws = np.array([
            sampler.sample_shell_masses(idx2, np.array([1.0, 0.75, 0.5, 0.25, 0.0]),
                                        1.0, sampler.RngStream(17, i)).values
            for i in range(m)])
        for i in range(4):
            for j in range(i + 1, 4):
                assert abs(stats.sample_correlation(draws[:, i], draws[:, j])) \
                    <= 3.0 / math.sqrt(m)

    def test_radii_validation(self, idx2):
        with pytest.raises(DomainError):
            sampler.sample_shell_masses(idx2, np.array([0.5, 0.7]), 1.0, sampler.RngStream(1))
        with pytest.raises(DomainError):
            sampler.sample_shell_masses(idx2, np.array([2.0, 1.0]), 1.0, sampler.RngStream(1))

    def test_gamma_15_scaling_across_widths(self, idx15, table15):
        n = 10_000
        scaled = []
        for k, w in enumerate((0.3, 0.6)):
            b = sampler.sample_single_ball(idx15, w, 1.0, sampler.RngStream(18, k), n,
                                           table=table15)
            scaled.append(b.values / w ** idx15.alpha_mass)
        assert stats.ks_two_sample(scaled[0], scaled[1]) <= 0.02


class TestBatchCsv:
    def test_roundtrip_bytes(self, idx2, tmp_path):
        b = sampler.sample_mstar(idx2, sampler.RngStream(19, 2), 64)
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        b.to_csv(p1)
        b.to_csv(p2)
        assert p1.read_bytes() == p2.read_bytes()
        text = p1.read_text()
        assert text.startswith("# stabletrees sample v1\n")
        assert "seed=19 stream=2 count=64" in text
        rows = [line for line in text.splitlines() if line and not line.startswith("#")]
        assert rows[0] == "index,value"
        assert len(rows) == 65
