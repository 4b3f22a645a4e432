import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import beta, binom

from seqcert.core import DomainError, HypothesisViolated, kl_bernoulli
from seqcert.intervals import (
    EXACT_C1,
    EXACT_C2_CONST,
    EXACT_C2_SLOPE,
    EXACT_C3,
    ConfidenceLevel,
    TrainedLambda,
    asymptotic_gamma,
    binomial_quantile,
    endpoint,
    endpoint_checks,
    endpoint_guaranteed_interval,
    gamma_deviation,
    trained_gamma_reference,
    true_deviation,
    two_sided,
)
from seqcert.pvalues import TestKind, log_p

KINDS = (TestKind.EXACT, TestKind.CHERNOFF_HOEFFDING, TestKind.PBR)


def clopper_pearson(n, k, a):
    lo = beta.ppf(a / 2, k, n - k + 1) if k > 0 else 0.0
    hi = beta.ppf(1 - a / 2, k + 1, n - k) if k < n else 1.0
    return lo, hi


class TestLevel:
    def test_alpha(self):
        assert ConfidenceLevel(0.01).alpha == pytest.approx(math.log(100), rel=1e-15)
        assert ConfidenceLevel.from_alpha(2.0).a == pytest.approx(math.exp(-2.0))

    def test_rejects(self):
        for a in (0.0, 1.0, 1.5):
            with pytest.raises(DomainError):
                ConfidenceLevel(a)


class TestEndpoint:
    def test_ch_closed_form(self):
        level = ConfidenceLevel(0.01)
        r = endpoint("ch", 100, 50, level)
        assert 100 * kl_bernoulli(0.5, r.phi_endpoint) == pytest.approx(level.alpha, abs=1e-9)

    def test_ordering_at_half(self):
        level = ConfidenceLevel(0.01)
        x, ch, pbr = (endpoint(k, 100, 50, level).phi_endpoint for k in KINDS)
        assert pbr <= ch <= x

    def test_bracket_and_gamma_invariants(self):
        for kind in KINDS:
            r = endpoint(kind, 1000, 300, ConfidenceLevel(0.001))
            assert r.converged and r.bracket_width <= 1e-12
            assert 0 < r.phi_endpoint <= r.theta_hat
            assert r.gamma == pytest.approx((0.3 - r.phi_endpoint) / r.sigma_hat, rel=1e-9)
            assert abs(float(log_p(kind, 1000, 300, r.phi_endpoint)) - r.alpha) <= 1e-9

    def test_no_rejection_for_zero_successes(self):
        r = endpoint("exact", 20, 0, ConfidenceLevel(0.05))
        assert r.no_rejection and r.phi_endpoint == 0.0 and r.boundary

    def test_all_successes(self):
        for kind in KINDS:
            r = endpoint(kind, 10, 10, ConfidenceLevel(0.05))
            assert r.boundary and 0 < r.phi_endpoint < 1
        # exact and CH agree when every trial succeeds: both are phi^n
        assert endpoint("exact", 10, 10, ConfidenceLevel(0.05)).phi_endpoint == pytest.approx(0.05 ** 0.1)

    def test_monotone_in_level(self):
        for kind in KINDS:
            ends = [endpoint(kind, 200, 120, ConfidenceLevel(a)).phi_endpoint for a in (0.2, 0.05, 0.01, 1e-4)]
            assert all(x >= y for x, y in zip(ends, ends[1:]))

    def test_ordering_grid(self):
        for n in (10, 50, 200):
            for k in range(1, n, max(1, n // 10)):
                for a in (0.1, 0.01):
                    x, ch, pbr = (endpoint(kd, n, k, ConfidenceLevel(a)).phi_endpoint for kd in KINDS)
                    assert pbr <= ch + 1e-12 and ch <= x + 1e-12

    def test_gamma_zero_when_endpoint_is_estimate(self):
        r = endpoint("ch", 100, 50, ConfidenceLevel(0.01))
        from dataclasses import replace

        assert gamma_deviation(replace(r, phi_endpoint=0.5)) == 0.0


class TestTrained:
    def test_gamma_near_reference(self):
        level = ConfidenceLevel(0.01)
        r = endpoint(TrainedLambda(0.5, 2500), 10_000, 5000, level)
        assert r.gamma == pytest.approx(trained_gamma_reference(level, 0.5), rel=0.01)

    def test_eval_frequency_caps_bracket(self):
        r = endpoint(TrainedLambda(0.5, 30), 100, 40, ConfidenceLevel(0.05))
        assert r.phi_endpoint <= 10 / 50


class TestGuaranteedIntervals:
    def test_constants(self):
        assert EXACT_C1 == pytest.approx(1.102, abs=5e-4)
        assert EXACT_C2_SLOPE == pytest.approx(2.066, abs=5e-4)
        assert EXACT_C2_CONST == pytest.approx(0.724, abs=5e-4)
        assert EXACT_C3 == pytest.approx(0.894, abs=5e-4)

    def test_ch_form(self):
        n, th, level = 10_000, 0.5, ConfidenceLevel(0.01)
        a = level.alpha
        r = 2.5 * math.sqrt(a) / math.sqrt(n * 0.25)
        iv = endpoint_guaranteed_interval("ch", n, th, level)
        assert iv.lo == pytest.approx(math.sqrt(2 * a) / math.sqrt(1 + r))
        assert iv.hi == pytest.approx(math.sqrt(2 * a) / math.sqrt(1 - r))

    def test_pbr_is_shifted_ch(self):
        from seqcert.core import h_n

        n, th, level = 10_000, 0.3, ConfidenceLevel(0.01)
        shift = 0.5 * math.log(n + 1) - h_n(n, th)
        shifted = ConfidenceLevel.from_alpha(level.alpha + shift)
        got = endpoint_guaranteed_interval("pbr", n, th, level)
        ref = endpoint_guaranteed_interval("ch", n, th, shifted)
        assert (got.lo, got.hi) == pytest.approx((ref.lo, ref.hi), rel=1e-14)

    def test_hypotheses(self):
        with pytest.raises(HypothesisViolated):
            endpoint_guaranteed_interval("ch", 10, 0.5, ConfidenceLevel(0.01))
        with pytest.raises(HypothesisViolated):
            endpoint_guaranteed_interval("exact", 10_000, 0.5, ConfidenceLevel(0.6))

    def test_grid_containment(self):
        checks = list(endpoint_checks(ns=(100, 1000, 10_000), levels=(0.1, 0.01, 0.001)))
        assert checks and all(c.ok for c in checks)
        assert {c.check for c in checks} == {"gamma_ch", "gamma_pbr", "gamma_exact"}


class TestAsymptotic:
    def test_ch_large_n(self):
        level = ConfidenceLevel(0.01)
        g = endpoint("ch", 10**6, 5 * 10**5, level).gamma
        assert g == pytest.approx(math.sqrt(2 * level.alpha), rel=1e-3)

    def test_pbr_large_n(self):
        level = ConfidenceLevel(0.01)
        n = 10**6
        g = endpoint("pbr", n, n // 2, level).gamma
        assert g == pytest.approx(asymptotic_gamma("pbr", n, 0.5, level), rel=1e-3)

    def test_exact_matches_normal_quantile(self):
        from scipy.stats import norm

        assert asymptotic_gamma("exact", 100, 0.5, ConfidenceLevel(0.1)) == pytest.approx(norm.isf(0.1), rel=1e-10)


class TestQuantile:
    def test_median(self):
        assert binomial_quantile(0.5, 100, 0.5) == 0.5

    def test_lower_quantile(self):
        assert binomial_quantile(0.16, 100, 0.5) == 0.45

    def test_ends(self):
        assert binomial_quantile(1e-300, 100, 0.5) == 0.0
        assert binomial_quantile(1.0, 100, 0.5) == 1.0

    @settings(max_examples=60)
    @given(st.floats(0.001, 0.999), st.integers(1, 300), st.floats(0.02, 0.98))
    def test_against_scipy(self, r, n, theta):
        k = round(binomial_quantile(r, n, theta) * n)
        assert binom.cdf(k, n, theta) >= r * (1 - 1e-9)
        if k > 0:
            assert binom.cdf(k - 1, n, theta) < r * (1 + 1e-9)


class TestTwoSided:
    def test_symmetric(self):
        lo, hi = two_sided("pbr", 100, 50, ConfidenceLevel(0.05))
        assert hi == pytest.approx(1 - lo, abs=1e-12)

    def test_clopper_pearson(self):
        lo, hi = two_sided("exact", 100, 50, ConfidenceLevel(0.05))
        ref = clopper_pearson(100, 50, 0.05)
        assert lo == pytest.approx(ref[0], abs=1e-10)
        assert hi == pytest.approx(ref[1], abs=1e-10)

    def test_contains_estimate(self):
        for kind in KINDS:
            for k in (0, 3, 17, 20):
                lo, hi = two_sided(kind, 20, k, ConfidenceLevel(0.1))
                assert lo <= k / 20 <= hi


class TestTrueDeviation:
    def test_at_estimate(self):
        r = endpoint("ch", 400, 100, ConfidenceLevel(0.01))
        assert true_deviation(0.25, r).tilde_gamma == pytest.approx(r.gamma, rel=1e-12)

    def test_decomposition(self):
        r = endpoint("exact", 400, 100, ConfidenceLevel(0.01))
        td = true_deviation(0.3, r)
        expected = (0.3 - r.theta_hat) / td.sigma + r.gamma * r.sigma_hat / td.sigma
        assert td.tilde_gamma == pytest.approx(expected, rel=1e-12)
