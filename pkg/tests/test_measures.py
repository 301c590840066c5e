"""Quantiles, VaR, ES, StdDev measures and their structural properties."""
from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from eulercap import (
    RiskMeasureSpec,
    ValidationError,
    chebychev_c,
    expected_shortfall,
    homogeneity_check,
    quantile,
    std_dev_measure,
    unexpected_loss,
    value_at_risk,
)
from eulercap.measures import order_index

X_HAND = np.array([-5.0, -1.0, 0.0, 2.0])

samples = hnp.arrays(np.float64, st.integers(1, 60),
                     elements=st.floats(-1e3, 1e3, allow_nan=False))
alphas = st.floats(0.01, 0.99)
ALL_SPECS = [RiskMeasureSpec.std_dev(2.0), RiskMeasureSpec.var(0.9), RiskMeasureSpec.es(0.9)]


def brute_quantile(x, g):
    """min{y in sample : #(x <= y)/N >= g} by enumeration."""
    return min(y for y in x if np.count_nonzero(x <= y) / len(x) >= g)


class TestQuantile:
    def test_median_of_five(self):
        assert quantile([1, 2, 3, 4, 5], 0.5) == 3

    def test_constant(self):
        assert quantile([7.0] * 9, 0.37) == 7.0

    def test_lower_quantile(self):
        assert quantile([0, 10], 0.25) == 0

    def test_empty(self):
        with pytest.raises(ValidationError):
            quantile([], 0.5)

    @pytest.mark.parametrize("g", [0.0, 1.0, -0.1, 1.5])
    def test_bad_gamma(self, g):
        with pytest.raises(ValidationError):
            quantile([1.0], g)

    def test_order_index_snaps_integer_products(self):
        assert order_index(0.999, 10**6) == 999_000
        assert order_index(0.7, 10) == 7
        assert order_index(0.71, 10) == 8

    @given(samples, st.floats(0.001, 0.999))
    def test_matches_enumeration(self, x, g):
        if abs(g * x.size - round(g * x.size)) < 1e-6:
            return  # snapping zone: enumeration with float division is ambiguous there
        assert quantile(x, g) == brute_quantile(x, g)


class TestVaRES:
    def test_hand_var(self):
        assert value_at_risk(X_HAND, 0.75) == 1.0

    def test_hand_es(self):
        assert expected_shortfall(X_HAND, 0.75) == 3.0

    def test_single_scenario(self):
        for a in (0.1, 0.5, 0.99):
            assert expected_shortfall([2.5], a) == -2.5

    @given(samples, alphas, st.floats(-100, 100))
    def test_translation(self, x, a, c):
        assert value_at_risk(x + c, a) == pytest.approx(value_at_risk(x, a) - c, abs=1e-9)

    @given(samples, alphas)
    def test_es_dominates_var(self, x, a):
        assert expected_shortfall(x, a) >= value_at_risk(x, a) - 1e-9

    @given(st.integers(0, 2**32 - 1), st.integers(1, 200), alphas, st.floats(-0.9, 0.9))
    def test_es_subadditive_without_ties(self, seed, n, a, r):
        # continuous draws are tie-free with probability one
        z = np.random.default_rng(seed).standard_normal((n, 2))
        v = np.column_stack([z[:, 0], r * z[:, 0] + np.sqrt(1 - r * r) * z[:, 1]]) * 100
        x, y = v[:, 0], v[:, 1]
        assume(all(np.unique(w).size == w.size for w in (x, y, x + y)))
        assert expected_shortfall(x + y, a) <= expected_shortfall(x, a) + expected_shortfall(y, a) + 1e-10 * (
            1 + np.abs(v).max())

    def test_tie_inclusive_es_can_break_subadditivity(self):
        # ties at the quantile enlarge the conditioning set unevenly
        x, y = np.array([0.0, 1.0, 1.0]), np.array([1.0, 0.0, 1.0])
        assert expected_shortfall(x, 0.5) == pytest.approx(-2 / 3)
        assert expected_shortfall(y, 0.5) == pytest.approx(-2 / 3)
        assert expected_shortfall(x + y, 0.5) == -1.0

    @given(hnp.arrays(np.float64, st.integers(5, 60), elements=st.floats(-10, 10),
                      unique=True), alphas)
    def test_comonotonic_additivity(self, x, a):
        y = x**3 + 2 * x  # strictly increasing, so no new ties
        for f in (value_at_risk, expected_shortfall):
            assert f(x + y, a) == pytest.approx(f(x, a) + f(y, a), rel=1e-12, abs=1e-9)

    def test_var_subadditivity_counterexample(self):
        # two assets losing 1 in disjoint 4% blocks of 100 scenarios
        x = np.zeros(100)
        y = np.zeros(100)
        x[:4] = -1.0
        y[4:8] = -1.0
        assert value_at_risk(x, 0.95) == 0.0
        assert value_at_risk(y, 0.95) == 0.0
        assert value_at_risk(x + y, 0.95) == 1.0


class TestStdDev:
    def test_hand(self):
        assert std_dev_measure([0.0, 2.0], 1.0) == 1.0

    def test_constant(self):
        assert std_dev_measure([3.0] * 4, 5.0) == 0.0

    def test_linear_in_c(self):
        x = np.array([1.0, 4.0, -2.0])
        assert std_dev_measure(x, 4.0) == pytest.approx(2 * std_dev_measure(x, 2.0), rel=1e-15)

    def test_bad_c(self):
        with pytest.raises(ValidationError):
            std_dev_measure([1.0], 0.0)


class TestChebychev:
    def test_half(self):
        assert chebychev_c(0.5) == 1.0

    def test_ninety(self):
        assert chebychev_c(0.9) == pytest.approx(3.0, rel=1e-15)

    def test_ninety_nine_against_root_find(self):
        mpmath.mp.dps = 30
        root = mpmath.findroot(lambda c: 1 / (1 + c**2) - mpmath.mpf("0.01"), 10)
        assert chebychev_c(0.99) == pytest.approx(float(root), rel=1e-14)
        assert chebychev_c(0.99) == pytest.approx(9.9498743710662, rel=1e-12)

    @pytest.mark.parametrize("a", [0.0, 1.0])
    def test_bad_alpha(self, a):
        with pytest.raises(ValidationError):
            chebychev_c(a)


class TestUnexpectedLoss:
    def test_hand(self):
        assert unexpected_loss(X_HAND, RiskMeasureSpec.var(0.75, True)) == 0.0

    def test_constant_is_zero(self):
        for spec in (RiskMeasureSpec.var(0.9, True), RiskMeasureSpec.es(0.9, True)):
            assert spec([4.0] * 5) == 0.0

    @given(hnp.arrays(np.float64, st.integers(1, 60), elements=st.integers(-1000, 1000).map(float)),
           alphas, st.integers(-100, 100).map(float))
    def test_translation_invariant(self, x, a, c):
        # integer-valued data keep x + c exact, so no new ties appear
        for spec in (RiskMeasureSpec.var(a, True), RiskMeasureSpec.es(a, True)):
            assert spec(x + c) == pytest.approx(spec(x), abs=1e-9 * (1 + abs(c) + np.abs(x).max()))

    def test_loss_form(self):
        L = np.array([0.0, 0.1, 0.3, 0.9])
        spec = RiskMeasureSpec.var(0.75, True)
        assert spec(-L) == pytest.approx(quantile(L, 0.75) - L.mean(), rel=1e-15)

    def test_stddev_rejected(self):
        with pytest.raises(ValidationError):
            RiskMeasureSpec.std_dev(1.0).__class__(RiskMeasureSpec.std_dev(1.0).kind, c=1.0,
                                                   unexpected_loss=True)
        with pytest.raises(ValidationError):
            unexpected_loss([1.0, 2.0], RiskMeasureSpec.std_dev(1.0))


class TestSpec:
    def test_describe(self):
        assert RiskMeasureSpec.var(0.999, True).describe() == "UL_VAR(alpha=0.999)"
        assert RiskMeasureSpec.std_dev(3).describe() == "std(c=3)"

    def test_validation(self):
        with pytest.raises(ValidationError):
            RiskMeasureSpec.es(1.2)
        with pytest.raises(ValidationError):
            RiskMeasureSpec.std_dev(-1)


class TestHomogeneity:
    @pytest.mark.parametrize("spec", ALL_SPECS, ids=lambda s: s.describe())
    def test_unit_factor(self, spec):
        assert homogeneity_check(spec, X_HAND, 1.0) == 0.0

    @given(hnp.arrays(np.float64, st.integers(2, 60), elements=st.floats(-1e3, 1e3)),
           st.sampled_from([0.5, 2.0, 10.0]))
    def test_degree_one(self, x, h):
        for spec in ALL_SPECS:
            assert homogeneity_check(spec, x, h) <= 1e-12

    def test_bad_h(self):
        with pytest.raises(ValidationError):
            homogeneity_check(ALL_SPECS[0], X_HAND, 0.0)


def test_var_matches_definition_on_normal_tail():
    # large-sample sanity: lower quantile of a standard normal sample
    x = np.random.default_rng(7).standard_normal(200_001)
    assert value_at_risk(x, 0.99) == pytest.approx(2.3263, abs=0.03)
    assert math.isfinite(expected_shortfall(x, 0.99))
