import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hetcop.truncnorm import (
    NumericsError,
    TNParams,
    _conditional_coefficients,
    sample_truncnorm,
    tmvn_gibbs,
    tn_moments,
    truncated_standard_ratios,
)

from helpers import random_correlation, tn_oracle, tn_oracle_grid


class TestMomentsAgainstIntegrationOracle:
    def test_full_grid(self):
        worst = 0.0
        for mu0, sigma0, a, b in tn_oracle_grid():
            m1, m2 = tn_moments(TNParams(mu0, sigma0, a, b))
            o1, o2 = tn_oracle(mu0, sigma0, a, b)
            rel1 = abs(m1 - o1) / max(abs(o1), 1e-10)
            rel2 = abs(m2 - o2) / max(abs(o2), 1e-10)
            worst = max(worst, rel1, rel2)
        assert worst <= 1e-8

    def test_half_normal(self):
        m1, m2 = tn_moments(TNParams(0.0, 1.0, 0.0, np.inf))
        assert m1 == pytest.approx(np.sqrt(2.0 / np.pi), abs=1e-12)
        assert m2 == pytest.approx(1.0, abs=1e-12)

    def test_symmetric_interval_has_zero_mean(self):
        m1, m2 = tn_moments(TNParams(0.0, 1.0, -1.3, 1.3))
        assert m1 == pytest.approx(0.0, abs=1e-15)
        assert 0 < m2 < 1

    def test_untruncated_limit(self):
        m1, m2 = tn_moments(TNParams(0.4, 2.0, -np.inf, np.inf))
        assert m1 == pytest.approx(0.4)
        assert m2 == pytest.approx(0.4**2 + 4.0)


class TestRatios:
    def test_scalar_and_array_agree(self):
        r, q = truncated_standard_ratios(0.2, 1.5)
        ra, qa = truncated_standard_ratios(np.array([0.2]), np.array([1.5]))
        assert r == ra[0] and q == qa[0]

    def test_reflection_antisymmetry(self):
        # TN(0,1) on (a,b) and (-b,-a) are mirror images.
        r1, q1 = truncated_standard_ratios(0.7, 2.0)
        r2, q2 = truncated_standard_ratios(-2.0, -0.7)
        assert r1 == pytest.approx(-r2, rel=1e-14)
        assert q1 == pytest.approx(q2, rel=1e-14)

    def test_deep_tail_does_not_degenerate(self):
        # Mass underflows in double precision; log-space path must hold.
        for a in (40.0, -41.0, 300.0):
            r, q = truncated_standard_ratios(a, a + 0.5)
            assert np.isfinite(r) and np.isfinite(q)
            m1 = r  # mu0=0, sigma0=1
            lo, hi = min(a, a + 0.5), max(a, a + 0.5)
            assert lo <= m1 <= hi

    def test_rejects_bad_interval(self):
        with pytest.raises(NumericsError):
            truncated_standard_ratios(1.0, 1.0)


@settings(max_examples=150, deadline=None)
@given(
    a=st.floats(-30, 30),
    width=st.floats(1e-3, 20),
    mu0=st.floats(-5, 5),
    sigma0=st.floats(0.1, 4),
)
def test_moment_bounds_property(a, width, mu0, sigma0):
    b = a + width
    m1, m2 = tn_moments(TNParams(mu0, sigma0, a, b))
    assert a - 1e-9 <= m1 <= b + 1e-9
    assert m2 - m1**2 >= -1e-9  # variance of a distribution


class TestTNParams:
    def test_validation(self):
        with pytest.raises(NumericsError):
            TNParams(0.0, 0.0, 0.0, 1.0)
        with pytest.raises(NumericsError):
            TNParams(0.0, 1.0, 2.0, 1.0)


class TestSampler:
    def test_within_bounds(self):
        rng = np.random.default_rng(0)
        lo = np.array([-1.0, 0.5, -np.inf])
        hi = np.array([0.0, 0.6, -3.0])
        for _ in range(50):
            z = sample_truncnorm(rng, 0.0, 1.0, lo, hi)
            assert np.all(z >= lo - 1e-12) and np.all(z <= hi + 1e-12)

    def test_mean_matches_moments(self):
        rng = np.random.default_rng(1)
        draws = sample_truncnorm(
            rng, 0.3, 1.2, np.full(40000, -0.5), np.full(40000, 2.0)
        )
        m1, _ = tn_moments(TNParams(0.3, 1.2, -0.5, 2.0))
        assert draws.mean() == pytest.approx(m1, abs=0.02)


class TestConditionals:
    def test_coefficients_match_direct_formula(self):
        rng = np.random.default_rng(3)
        sigma = random_correlation(rng, 5)
        B, cond_var = _conditional_coefficients(sigma)
        for j in range(5):
            rest = [i for i in range(5) if i != j]
            S22 = sigma[np.ix_(rest, rest)]
            s12 = sigma[j, rest]
            w = np.linalg.solve(S22, s12)
            assert np.allclose(B[rest, j], w, atol=1e-10)
            assert B[j, j] == 0.0
            assert cond_var[j] == pytest.approx(1.0 - s12 @ w, abs=1e-10)


class TestGibbsSampler:
    def test_deterministic_given_seed(self):
        sigma = np.array([[1.0, 0.4], [0.4, 1.0]])
        lo, hi = np.array([0.0, -np.inf]), np.array([np.inf, 1.0])
        z1 = tmvn_gibbs(sigma, lo, hi, 50, burn_in=10, seed=42)
        z2 = tmvn_gibbs(sigma, lo, hi, 50, burn_in=10, seed=42)
        assert np.array_equal(z1, z2)

    def test_respects_bounds_and_shape(self):
        rng = np.random.default_rng(4)
        sigma = random_correlation(rng, 3)
        lo = np.array([-1.0, 0.0, -np.inf])
        hi = np.array([0.5, np.inf, 0.0])
        z = tmvn_gibbs(sigma, lo, hi, 200, burn_in=50, seed=1)
        assert z.shape == (200, 3)
        assert np.all(z >= lo - 1e-12) and np.all(z <= hi + 1e-12)

    def test_independent_case_moments(self):
        # Identity Sigma: coordinates are independent univariate TNs.
        lo = np.array([0.0, -1.0])
        hi = np.array([np.inf, 1.0])
        z = tmvn_gibbs(np.eye(2), lo, hi, 20000, burn_in=100, seed=7)
        m1a, _ = tn_moments(TNParams(0.0, 1.0, 0.0, np.inf))
        assert z[:, 0].mean() == pytest.approx(m1a, abs=0.02)
        assert z[:, 1].mean() == pytest.approx(0.0, abs=0.02)

    def test_pinned_coordinates_stay_fixed(self):
        sigma = np.array([[1.0, 0.3], [0.3, 1.0]])
        lo = np.array([0.7, -np.inf])
        hi = np.array([0.7, np.inf])
        z = tmvn_gibbs(sigma, lo, hi, 30, burn_in=5, seed=2)
        assert np.all(z[:, 0] == 0.7)

    def test_rejects_bad_inputs(self):
        with pytest.raises(NumericsError):
            tmvn_gibbs(np.eye(2), np.array([1.0, 0.0]), np.array([0.0, 1.0]), 10)
        bad = np.array([[1.0, 2.0], [2.0, 1.0]])
        with pytest.raises(NumericsError):
            tmvn_gibbs(bad, np.zeros(2), np.ones(2), 10)
