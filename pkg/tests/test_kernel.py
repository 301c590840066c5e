"""Bandwidth rule, Rosenblatt-Parzen density, smoothed quantile and
Nadaraya-Watson regression."""
from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp
from scipy import integrate, special

from eulercap import (
    DegeneracyError,
    KernelConfig,
    ValidationError,
    nadaraya_watson,
    quantile,
    rp_density,
    silverman_bandwidth,
    silverman_rule,
    smoothed_cdf,
    smoothed_quantile,
    smoothing_noise_mean,
)
from eulercap.kernel import kernel_weights, nadaraya_watson_se

# Oracle values below were computed with mpmath at 40 digits, independently
# of the package code.
SILVERMAN_1_TO_10 = 1.6310582966968854612
SQ_01_B1_G09 = 1.9393654498506210306
SQ_013_B05_G025 = 0.24141117914722096858
NW_013 = 4.3052982032926412534
NOISE_013 = 0.062718143111354490461
RP_013 = 0.31947727830271261319

def cfg(b):
    return KernelConfig(bandwidth=b)


spread_samples = hnp.arrays(np.float64, st.integers(2, 50), elements=st.floats(-100, 100)).filter(
    lambda x: x.std() > 1e-3)


class TestConfig:
    def test_defaults(self):
        c = KernelConfig()
        assert (c.kernel, c.bandwidth) == ("gaussian", "silverman")

    @pytest.mark.parametrize("bw", [0.0, -1.0, float("nan"), "scott"])
    def test_bad_bandwidth(self, bw):
        with pytest.raises(ValidationError):
            KernelConfig(bandwidth=bw)

    def test_bad_kernel(self):
        with pytest.raises(ValidationError):
            KernelConfig(kernel="epanechnikov")


class TestSilverman:
    def test_rule_exact(self):
        assert silverman_rule(1.0, 1.34, 32) == pytest.approx(0.45, rel=1e-15)

    def test_min_branch(self):
        assert silverman_rule(2.0, 1.34, 32) == pytest.approx(0.45, rel=1e-15)

    def test_zero_iqr_falls_back_to_sigma(self):
        assert silverman_rule(2.0, 0.0, 32) == pytest.approx(0.9, rel=1e-15)

    def test_oracle(self):
        assert silverman_bandwidth(np.arange(1, 11)) == pytest.approx(SILVERMAN_1_TO_10, rel=1e-14)

    def test_zero_spread(self):
        with pytest.raises(DegeneracyError, match="zero-spread"):
            silverman_bandwidth([3.0, 3.0, 3.0])

    def test_too_short(self):
        with pytest.raises(ValidationError):
            silverman_bandwidth([1.0])

    @given(spread_samples, st.floats(0.1, 10))
    def test_scale_equivariant(self, x, h):
        assert silverman_bandwidth(h * x) == pytest.approx(h * silverman_bandwidth(x), rel=1e-9)


class TestDensity:
    def test_single_point(self):
        assert rp_density([0.0], cfg(1.0), 0.0) == pytest.approx(1 / math.sqrt(2 * math.pi), rel=1e-15)

    def test_oracle(self):
        assert rp_density([0, 1, 3], cfg(0.5), 0.8) == pytest.approx(RP_013, rel=1e-14)

    def test_integrates_to_one(self, rng):
        x = rng.standard_normal(300)
        grid = np.linspace(-8, 8, 4001)
        assert integrate.trapezoid(rp_density(x, KernelConfig(), grid), grid) == pytest.approx(1, abs=1e-3)

    def test_symmetry(self):
        x = np.array([-2.0, -0.5, 0.5, 2.0]) + 1.0
        assert rp_density(x, cfg(0.7), 1.3) == pytest.approx(rp_density(x, cfg(0.7), 0.7), rel=1e-14)

    @given(spread_samples, st.floats(-200, 200))
    def test_non_negative(self, x, y):
        assert rp_density(x, KernelConfig(), y) >= 0


class TestSmoothedQuantile:
    def test_single_point_median(self):
        assert smoothed_quantile([0.0], cfg(1.0), 0.5) == pytest.approx(0.0, abs=1e-10)

    def test_inverts_normal_cdf(self):
        assert smoothed_quantile([0.0], cfg(1.0), float(special.ndtr(1.0))) == pytest.approx(1.0, abs=1e-9)

    @pytest.mark.parametrize("sample,b,g,want", [
        ([0.0, 1.0], 1.0, 0.9, SQ_01_B1_G09),
        ([0.0, 1.0, 3.0], 0.5, 0.25, SQ_013_B05_G025),
    ])
    def test_oracle(self, sample, b, g, want):
        assert smoothed_quantile(sample, cfg(b), g) == pytest.approx(want, abs=1e-9)

    def test_tiny_bandwidth_with_gaps(self):
        # the smoothed CDF sits at exactly 1/16 between the two lowest clusters
        x = np.array([-17.0] + [0.0] * 11 + [1.0] * 4)
        y = smoothed_quantile(x, cfg(1e-75), 1 / 16)
        assert -17.0 <= y <= 0.0
        assert smoothed_quantile(x, cfg(1e-75), 0.1) == pytest.approx(0.0, abs=1e-9)

    def test_small_bandwidth_limit(self, rng):
        x = rng.standard_normal(101)
        assert smoothed_quantile(x, cfg(1e-6), 0.7) == pytest.approx(quantile(x, 0.7), abs=1e-4)

    def test_presorted_matches(self, rng):
        x = rng.standard_normal(1000)
        a = smoothed_quantile(x, KernelConfig(), 0.99)
        b = smoothed_quantile(np.sort(x), KernelConfig(), 0.99, presorted=True)
        assert a == b

    def test_windowed_cdf_matches_full_sum(self, rng):
        x = rng.standard_normal(5000) * 3
        for y in (-7.0, 0.3, 5.5):
            full = special.ndtr((y - x) / 0.2).mean()
            assert smoothed_cdf(x, 0.2, y) == pytest.approx(full, abs=1e-15)

    @given(spread_samples, st.floats(0.01, 0.98), st.floats(0.001, 0.01))
    def test_monotone_in_gamma(self, x, g, dg):
        c = KernelConfig()
        assert smoothed_quantile(x, c, g) <= smoothed_quantile(x, c, g + dg) + 1e-9 * (1 + np.abs(x).max())

    @pytest.mark.parametrize("g", [0.0, 1.0])
    def test_bad_gamma(self, g):
        with pytest.raises(ValidationError):
            smoothed_quantile([0.0, 1.0], cfg(1.0), g)


class TestNadarayaWatson:
    def test_oracle(self):
        assert nadaraya_watson([0, 1, 3], [2, 5, -1], cfg(0.5), 0.8) == pytest.approx(NW_013, rel=1e-14)

    def test_noise_mean_oracle(self):
        assert smoothing_noise_mean([0, 1, 3], 0.5, 0.8) == pytest.approx(NOISE_013, rel=1e-13)

    def test_constant_response(self, rng):
        x = rng.standard_normal(50)
        assert nadaraya_watson(x, np.full(50, 2.5), KernelConfig(), 0.3) == pytest.approx(2.5, rel=1e-15)

    def test_single_point(self):
        assert nadaraya_watson([1.0], [4.0], cfg(1.0), 20.0) == 4.0

    def test_far_query_keeps_precision(self):
        # 30 bandwidths away every unshifted weight underflows relative to the sum
        x = np.array([0.0, 0.1])
        w = kernel_weights(x, 0.01, 0.4)
        assert w.sum() == pytest.approx(1.0) and w[1] > w[0] > 0

    def test_far_query_returns_nearest_response(self):
        assert nadaraya_watson([0.0, 1.0], [1.0, 2.0], cfg(0.01), 5.0) == 2.0

    def test_overflowing_distances_take_nearest_limit(self):
        assert nadaraya_watson([0.0, 1.0, 1.0], [1.0, 2.0, 4.0], cfg(5e-324), 5.0) == 3.0

    def test_non_finite_query(self):
        with pytest.raises(ValidationError):
            nadaraya_watson([0.0, 1.0], [1.0, 2.0], cfg(1.0), float("nan"))

    def test_length_mismatch(self):
        with pytest.raises(ValidationError):
            nadaraya_watson([0.0, 1.0], [1.0], cfg(1.0), 0.0)

    def test_bivariate_normal(self):
        r = np.random.default_rng(11)
        n, rho, x0 = 20000, 0.6, 1.0
        z = r.standard_normal((n, 2))
        x, y = z[:, 0], rho * z[:, 0] + math.sqrt(1 - rho**2) * z[:, 1]
        b = silverman_bandwidth(x)
        est = nadaraya_watson(x, y, KernelConfig(), x0)
        se = nadaraya_watson_se(x, y, b, x0)
        # smoothing bias: E[Y | X + b xi = x0] = rho * x0 / (1 + b^2) for standard normals
        assert abs(est - rho * x0 / (1 + b * b)) <= 3 * se

    @given(spread_samples, st.data())
    def test_convex_combination(self, x, data):
        y = np.array(data.draw(st.lists(st.floats(-50, 50), min_size=x.size, max_size=x.size)))
        x0 = data.draw(st.floats(float(x.min()), float(x.max())))
        est = nadaraya_watson(x, y, KernelConfig(), x0)
        assert y.min() - 1e-9 <= est <= y.max() + 1e-9

    @given(spread_samples, st.data())
    def test_additive_over_columns(self, x, data):
        n = x.size
        cols = np.array(data.draw(st.lists(st.lists(st.floats(-50, 50), min_size=3, max_size=3),
                                           min_size=n, max_size=n)))
        x0 = float(np.median(x))
        per_col = nadaraya_watson(x, cols, KernelConfig(), x0)
        total = nadaraya_watson(x, cols.sum(axis=1), KernelConfig(), x0)
        assert total == pytest.approx(per_col.sum(), rel=1e-12, abs=1e-12 * (1 + np.abs(cols).max()))


def test_mpmath_normal_cdf_agreement():
    """scipy's ndtr used for Phi agrees with 30-digit mpmath on [-8, 8]."""
    mpmath.mp.dps = 30
    for x in np.linspace(-8, 8, 161):
        ref = float(mpmath.ncdf(x))
        assert abs(special.ndtr(x) - ref) <= 1e-13 * ref
