import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from wagermarket import dist as D
from wagermarket import scoring as S
from wagermarket.errors import SupportNotUnit

E1 = D.Categorical([0.1, 0.1, 0.6, 0.1, 0.1])
E2 = D.Categorical([0.0, 0.2, 0.6, 0.2, 0.0])
E3 = D.Categorical([0.2, 0.0, 0.6, 0.0, 0.2])


@pytest.mark.parametrize("p, omega, want", [(1.0, 1, 0.0), (0.5, 0, 0.25), (0.1, 0, 0.01)])
def test_brier(p, omega, want):
    assert S.brier(D.Binary(p), omega) == pytest.approx(want, abs=1e-15)


def test_quadratic_examples():
    assert S.quadratic_score(E1, 3) == pytest.approx(0.8, abs=1e-12)
    assert S.quadratic_score(E2, 3) == pytest.approx(0.76, abs=1e-12)
    assert S.quadratic_score(E3, 3) == pytest.approx(0.76, abs=1e-12)
    assert S.quadratic_score(D.Categorical([0, 1, 0]), 2) == pytest.approx(1.0)


def test_rps_hand_sums():
    assert S.rps(E1, 3) == pytest.approx(0.10, abs=1e-12)
    assert S.rps(E3, 3) == pytest.approx(0.16, abs=1e-12)
    assert S.rps(D.Categorical([0, 0, 1, 0]), 3) == 0.0


def test_normalized_rps_examples():
    got = [S.normalized_rps(e, 3) for e in (E1, E2, E3)]
    np.testing.assert_allclose(got, [0.975, 0.98, 0.96], atol=1e-12)


def test_rps_is_distance_sensitive_but_quadratic_is_not():
    assert S.quadratic_score(E2, 3) == pytest.approx(S.quadratic_score(E3, 3))
    assert S.normalized_rps(E2, 3) > S.normalized_rps(E3, 3)
    spread = D.Categorical(S.mean_preserving_spread(E2.probs, 3, 0.2))
    assert S.normalized_rps(spread, 3) < S.normalized_rps(E2, 3)


class TestCrps:
    def test_point_forecast(self):
        g = D.QuantileGrid(D.GridSpec(99).taus, np.full(99, 0.4))
        for omega in (0.4, 0.9, -2.0):
            assert S.crps(g, omega) == pytest.approx(abs(0.4 - omega), abs=1e-12)

    def test_uniform_center(self):
        assert S.crps(D.Uniform(0, 1), 0.5) == pytest.approx(1 / 12, abs=1e-6)

    def test_standard_normal_at_zero(self):
        assert S.crps_normal(0.0, 1.0, 0.0) == pytest.approx(0.23370, abs=1e-5)
        assert S.crps(D.Normal(0, 1), 0.0) == pytest.approx(0.23370, abs=1e-5)

    def test_grid_matches_quadrature_of_its_own_cdf(self):
        # the grid integral is exact for the piecewise-linear grid CDF
        g = D.to_quantile_grid(D.Beta(2, 5), D.GridSpec(49))
        F = lambda x: D.cdf_eval(g, x)  # noqa: E731
        omega = 0.37
        lo, hi = g.values[0], g.values[-1]
        ref = integrate.quad(lambda x: F(x) ** 2, lo, omega, points=g.values, limit=500)[0]
        ref += integrate.quad(lambda x: (1 - F(x)) ** 2, omega, hi, points=g.values, limit=500)[0]
        assert S.crps(g, omega) == pytest.approx(ref, abs=1e-9)

    def test_vectorized_matches_scalar(self):
        x = np.linspace(-3, 3, 7)
        vec = S.crps(D.Normal(0, 1), x)
        np.testing.assert_allclose(vec, [S.crps(D.Normal(0, 1), v) for v in x], rtol=0, atol=1e-15)

    @settings(max_examples=30, deadline=None)
    @given(st.floats(-2, 2), st.floats(0.1, 2), st.floats(-2.5, 2.5))
    def test_normal_closed_form(self, mu, sigma, z):
        omega = mu + sigma * z
        assert S.crps(D.Normal(mu, sigma), omega) == pytest.approx(
            S.crps_normal(mu, sigma, omega), abs=1e-4
        )

    def test_oriented_crps_examples(self):
        taus = D.GridSpec(99).taus
        assert S.oriented_crps(D.QuantileGrid(taus, np.full(99, 0.6), (0, 1)), 0.6) == 1.0
        assert S.oriented_crps(D.QuantileGrid(taus, np.zeros(99), (0, 1)), 1.0) == pytest.approx(0.0)
        assert S.oriented_crps(D.Uniform(0, 1), 0.5) == pytest.approx(0.91667, abs=1e-5)

    def test_oriented_crps_rejects_wide_support(self):
        with pytest.raises(SupportNotUnit):
            S.oriented_crps(D.Normal(0, 1), 0.5)


def test_log_score_examples():
    assert S.log_score(D.Categorical([0, 1, 0]), 2) == pytest.approx(0.0)
    assert S.log_score(D.Uniform(0, 1), 0.3) == pytest.approx(0.0)
    assert S.log_score(D.Categorical([0.5, 0.5]), 1) == pytest.approx(math.log(2))


def test_non_locality():
    # equal density at the outcome, different tails
    a = D.Normal(0.0, 1.0)
    half_width = 0.5 / stats.norm.pdf(0)
    wide = D.Uniform(-half_width, half_width)
    assert S.locality_contrast(S.ScoringRule.LOG, a, wide, 0.0) == pytest.approx(0.0, abs=1e-12)
    assert abs(S.locality_contrast(S.ScoringRule.CRPS, a, wide, 0.0)) > 1e-3


class TestPropriety:
    def test_zero_gap_when_truthful(self):
        gap, _ = S.propriety_gap(S.ScoringRule.BRIER, D.Binary(0.7), D.Binary(0.7), 1000, 1)
        assert gap == 0.0

    def test_brier_gap_closed_form(self):
        gap, half = S.propriety_gap(S.ScoringRule.BRIER, D.Binary(0.7), D.Binary(0.2), 200000, 5)
        assert half < 0.01
        assert abs(gap - 0.25) <= half

    def test_crps_gap_positive(self):
        gap, half = S.propriety_gap(
            S.ScoringRule.ORIENTED_CRPS, D.Beta(2, 5), D.Beta(5, 2), 100000, 9
        )
        assert gap > half

    @settings(max_examples=20, deadline=None)
    @given(st.floats(0.05, 0.95), st.floats(0.05, 0.95))
    def test_brier_expected_gap_nonnegative(self, p, q):
        # exact expectation, no sampling
        e = lambda r: p * S.brier(D.Binary(r), 1) + (1 - p) * S.brier(D.Binary(r), 0)  # noqa: E731
        assert e(q) - e(p) == pytest.approx((p - q) ** 2, abs=1e-12)


def test_oriented_scores_lie_in_unit_interval():
    rng = np.random.Generator(np.random.Philox(3))
    for _ in range(50):
        probs = rng.dirichlet(np.ones(5))
        j = int(rng.integers(1, 6))
        for rule in S.UNIT_RULES - {S.ScoringRule.ORIENTED_CRPS, S.ScoringRule.BRIER}:
            assert 0.0 <= S.oriented_score(rule, D.Categorical(probs), j) <= 1.0
        assert 0.0 <= S.oriented_score(S.ScoringRule.ORIENTED_CRPS, D.Beta(*rng.uniform(0.5, 5, 2)), rng.random()) <= 1.0
