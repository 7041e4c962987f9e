import numpy as np
import pytest
from scipy.special import ndtr

from oracles import ks_statistic_sweep
from ttsalab.errors import InsufficientSamples, NonPositiveInput
from ttsalab.stats import (
    autocov_estimate,
    empirical_cov,
    kolmogorov_pvalue,
    ks_statistic,
    ks_test_1d,
    rate_slope,
)

# frozen from the direct sorted-CDF sweep (seed 424242, 1e5 normal draws)
GOLDEN_KS_STAT = 0.0021889765000061567


class TestEmpiricalCov:
    def test_two_point_example(self):
        est = empirical_cov([[1.0, 0.0], [-1.0, 0.0]])
        assert np.array_equal(est.matrix, [[1.0, 0.0], [0.0, 0.0]])

    def test_all_zeros(self):
        est = empirical_cov(np.zeros((10, 2)))
        assert not np.any(est.matrix)
        assert not np.any(est.mean_flagged)

    def test_matches_known_covariance(self):
        rng = np.random.default_rng(77)
        samples = rng.standard_normal((100_000, 2)) * np.sqrt([2.0, 3.0])
        est = empirical_cov(samples)
        target = np.diag([2.0, 3.0])
        assert np.all(np.abs(est.matrix - target) < 3.0 * est.std_errors
                      + 1e-12)

    def test_permutation_invariant(self):
        rng = np.random.default_rng(3)
        samples = rng.standard_normal((500, 3))
        est1 = empirical_cov(samples)
        est2 = empirical_cov(samples[rng.permutation(500)])
        assert np.allclose(est1.matrix, est2.matrix, atol=1e-15)

    def test_mean_report_flags_offsets(self):
        rng = np.random.default_rng(4)
        samples = rng.standard_normal((5000, 2)) * 0.1
        samples[:, 1] += 5.0
        est = empirical_cov(samples)
        assert not est.mean_flagged[0]
        assert est.mean_flagged[1]

    def test_needs_two_samples(self):
        with pytest.raises(InsufficientSamples):
            empirical_cov([[1.0, 2.0]])


class TestRateSlope:
    def test_exact_proportionality(self):
        ns = [256, 512, 1024, 2048, 4096]
        steps = [0.7 * (n + 1) ** -0.6 for n in ns]
        msn = [3.0 * s for s in steps]
        slope, r_sq = rate_slope(ns, msn, steps)
        assert slope == pytest.approx(1.0, abs=1e-12)
        assert r_sq == pytest.approx(1.0, abs=1e-12)

    def test_quadratic_scaling(self):
        ns = [10, 20, 40, 80]
        steps = [1.0 / n for n in ns]
        msn = [3.0 * s ** 2 for s in steps]
        slope, _ = rate_slope(ns, msn, steps)
        assert slope == pytest.approx(2.0, abs=1e-12)

    def test_rejects_nonpositive(self):
        with pytest.raises(NonPositiveInput):
            rate_slope([1, 2, 3, 4], [1.0, -1.0, 1.0, 1.0],
                       [0.1, 0.2, 0.3, 0.4])

    def test_needs_four_points(self):
        with pytest.raises(InsufficientSamples):
            rate_slope([1, 2, 3], [1.0, 2.0, 3.0], [0.1, 0.2, 0.3])


class TestKs:
    def test_single_point_statistic(self):
        # one sample at 0 against the standard normal: jump from 0 to 1 at
        # Phi(0) = 0.5 gives statistic 0.5
        assert ks_statistic([0.0], ndtr) == pytest.approx(0.5)

    def test_quantile_construction(self):
        n = 1000
        from scipy.special import ndtri
        samples = ndtri((np.arange(1, n + 1) - 0.5) / n)
        assert ks_statistic(samples, ndtr) <= 0.5 / n + 1e-9

    def test_golden_statistic_and_sweep_oracle(self):
        rng = np.random.default_rng(424242)
        samples = rng.standard_normal(100_000)
        stat = ks_statistic(samples, ndtr)
        assert stat == pytest.approx(GOLDEN_KS_STAT, abs=1e-15)
        sweep = ks_statistic_sweep(samples[:2000], ndtr)
        assert ks_statistic(samples[:2000], ndtr) == pytest.approx(
            sweep, abs=1e-15)

    def test_scalar_only_cdf_supported(self):
        import math

        def scalar_cdf(v):
            return 0.5 * (1 + math.erf(float(v) / math.sqrt(2)))

        stat = ks_statistic([0.0, 0.0], scalar_cdf)
        assert stat == pytest.approx(0.5)

    def test_verdict_pass_and_fail(self):
        rng = np.random.default_rng(123)
        good = ks_test_1d(rng.standard_normal(5000), ndtr)
        assert good.passed and good.p_value > 0.01
        shifted = ks_test_1d(rng.standard_normal(5000) + 1.0, ndtr)
        assert not shifted.passed and shifted.p_value < 1e-6

    def test_minimum_sample_size(self):
        with pytest.raises(InsufficientSamples):
            ks_test_1d(np.zeros(10), ndtr)

    def test_kolmogorov_pvalue_limits(self):
        assert kolmogorov_pvalue(0.0) == 1.0
        assert kolmogorov_pvalue(10.0) < 1e-80
        # known value Q(1) ~ 0.26999967
        assert kolmogorov_pvalue(1.0) == pytest.approx(0.2699996716773, abs=1e-10)

    def test_null_pvalues_roughly_uniform(self):
        # 200 independent true-null trials: the count below p = 0.01 stays
        # inside the wide binomial band [1, 8] around the expected 2
        rng = np.random.default_rng(2718)
        below = 0
        for _ in range(200):
            verdict = ks_test_1d(rng.standard_normal(2000), ndtr)
            if verdict.p_value < 0.01:
                below += 1
        assert 1 <= below <= 8


class TestAutocov:
    def test_equal_indices_match_empirical_cov(self):
        rng = np.random.default_rng(1)
        fdd = rng.standard_normal((400, 3, 2))
        est = empirical_cov(fdd[:, 1, :])
        auto = autocov_estimate(fdd, 1, 1)
        assert np.array_equal(auto, est.matrix)

    def test_deterministic_decay(self):
        # paths u * exp(-t) with u = +/-1 equally: autocov at (t, t+s) is
        # exp(-t) * exp(-(t+s))
        times = np.array([0.25, 0.75])
        us = np.array([1.0, -1.0, 1.0, -1.0])
        fdd = us[:, None, None] * np.exp(-times)[None, :, None]
        auto = autocov_estimate(fdd, 0, 1)
        assert auto[0, 0] == pytest.approx(np.exp(-0.25) * np.exp(-0.75))

    def test_rejects_bad_shapes(self):
        with pytest.raises(ValueError):
            autocov_estimate(np.zeros((4, 3)), 0, 1)
        with pytest.raises(IndexError):
            autocov_estimate(np.zeros((4, 3, 2)), 0, 5)
        with pytest.raises(InsufficientSamples):
            autocov_estimate(np.zeros((1, 3, 2)), 0, 1)
