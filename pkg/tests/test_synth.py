"""Synthetic generators against their analytic properties."""

import numpy as np
import pytest

from mfspec import (CascadeSpec, MfdfaConfig, RngSpec, Series, analytic_cascade_hurst,
                    binomial_cascade, build_profile, fgn, fgn_autocovariance,
                    fit_hurst, fluctuation_function, gaussian_white_noise,
                    ks_gaussian_test, sample_autocorrelation)
from mfspec.synth import _cascade_values, _check_embeddable


def _centered_autocov(x: np.ndarray, lag: int) -> float:
    d = x - x.mean()
    return float(np.dot(d[lag:], d[:d.size - lag]) / d.size)


class TestWhiteNoise:
    def test_moments(self):
        x = gaussian_white_noise(100000, RngSpec(1, 0)).values
        assert abs(x.mean()) < 0.02
        assert abs(x.var() - 1.0) < 0.02

    def test_deterministic(self):
        a = gaussian_white_noise(256, RngSpec(5, 9)).values
        b = gaussian_white_noise(256, RngSpec(5, 9)).values
        assert np.array_equal(a, b)

    def test_lag1_uncorrelated(self):
        s = gaussian_white_noise(65536, RngSpec(2, 0))
        assert abs(sample_autocorrelation(s, 1)) < 0.01

    def test_domain(self):
        with pytest.raises(ValueError):
            gaussian_white_noise(0, RngSpec(1))


class TestFgn:
    def test_h_half_is_white(self):
        s = fgn(2 ** 16, 0.5, RngSpec(3, 0))
        for lag in range(1, 11):
            assert abs(sample_autocorrelation(s, lag)) < 0.02

    def test_autocovariance_matches_analytic(self):
        lags = np.arange(21)
        want = fgn_autocovariance(0.8, lags)
        got = np.zeros(21)
        n_seeds = 20
        for seed in range(n_seeds):
            x = fgn(2 ** 18, 0.8, RngSpec(100, seed)).values
            got += np.array([_centered_autocov(x, int(k)) for k in lags])
        got /= n_seeds
        assert np.max(np.abs(got - want)) < 0.03

    def test_aggregated_variance_scaling(self):
        # variance of block sums of fGn grows as L^(2H)
        x = fgn(2 ** 18, 0.8, RngSpec(101, 0)).values
        block_sizes = [2 ** k for k in range(4, 11)]
        variances = []
        for L in block_sizes:
            blocks = x[: (x.size // L) * L].reshape(-1, L).sum(axis=1)
            variances.append(blocks.var())
        slope = np.polyfit(np.log(block_sizes), np.log(variances), 1)[0]
        assert slope == pytest.approx(1.6, abs=0.1)

    def test_matches_white_noise_in_distribution(self):
        # two-sample KS via the one-sample Gaussianity check on both
        a = fgn(2 ** 12, 0.5, RngSpec(7, 0))
        b = gaussian_white_noise(2 ** 12, RngSpec(7, 1))
        assert ks_gaussian_test(a).p_value > 0.01
        assert ks_gaussian_test(b).p_value > 0.01
        from scipy import stats
        assert stats.ks_2samp(a.values, b.values).pvalue > 0.01

    def test_domain(self):
        with pytest.raises(ValueError):
            fgn(100, 0.8, RngSpec(1))  # not a power of two
        with pytest.raises(ValueError):
            fgn(128, 1.0, RngSpec(1))

    def test_embeddability_guard(self):
        with pytest.raises(ValueError, match="not embeddable"):
            _check_embeddable(np.array([1.0, -1e-6, 2.0]))
        out = _check_embeddable(np.array([1.0, -1e-12, 2.0]))
        assert np.min(out) == 0.0


class TestBinomialCascade:
    def test_two_level_expansion(self):
        a = 0.75
        v = _cascade_values(2, a, [np.zeros(1, dtype=int), np.zeros(2, dtype=int)])
        np.testing.assert_allclose(v, [0.5625, 0.1875, 0.1875, 0.0625], rtol=1e-12)

    def test_unit_mean_normalization(self):
        s = binomial_cascade(CascadeSpec(levels=10, weight_a=0.7), RngSpec(4, 0))
        assert float(np.sum(s.values)) == pytest.approx(2 ** 10, rel=1e-12)

    def test_deterministic(self):
        a = binomial_cascade(CascadeSpec(12, 0.75), RngSpec(6, 1)).values
        b = binomial_cascade(CascadeSpec(12, 0.75), RngSpec(6, 1)).values
        assert np.array_equal(a, b)

    def test_mfdfa_matches_analytic(self):
        cfg = MfdfaConfig(poly_order=4)
        q = np.array(cfg.q_grid)
        s = binomial_cascade(CascadeSpec(levels=16, weight_a=0.75), RngSpec(0, 0))
        h = fit_hurst(fluctuation_function(build_profile(s), cfg))
        for qq in (-5.0, -2.0, 2.0, 5.0):
            est = float(h.h[q == qq][0])
            assert est == pytest.approx(analytic_cascade_hurst(qq, 0.75), abs=0.07), qq

    def test_spec_validation(self):
        with pytest.raises(ValueError):
            CascadeSpec(levels=0, weight_a=0.75)
        with pytest.raises(ValueError):
            CascadeSpec(levels=8, weight_a=0.5)


class TestAnalyticCascadeHurst:
    def test_equal_weights_degenerate(self):
        # a = b = 1/2 is the uniform measure: h(q) = 1 for every q
        for q in (-5.0, -1.0, 1.0, 5.0):
            assert analytic_cascade_hurst(q, 0.5) == pytest.approx(1.0, abs=1e-12)

    def test_large_q_asymptote(self):
        # h(q) - 1/q -> -log2(a) as q -> +inf
        assert analytic_cascade_hurst(10.0, 0.75) - 0.1 == pytest.approx(
            -np.log2(0.75), abs=0.03)

    def test_small_weight_asymptote(self):
        assert analytic_cascade_hurst(-10.0, 0.75) == pytest.approx(-np.log2(0.25), abs=0.1)

    def test_nonincreasing_and_continuous_at_zero(self):
        qs = np.linspace(-8, 8, 81)
        vals = [analytic_cascade_hurst(float(q), 0.75) for q in qs]
        assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))
        h0 = analytic_cascade_hurst(0.0, 0.75)
        assert analytic_cascade_hurst(1e-4, 0.75) == pytest.approx(h0, abs=1e-3)
        assert analytic_cascade_hurst(-1e-4, 0.75) == pytest.approx(h0, abs=1e-3)

    def test_weight_domain(self):
        with pytest.raises(ValueError):
            analytic_cascade_hurst(1.0, 0.0)
