import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import optimize, special

from wagermarket import dist as D
from wagermarket.errors import TauOutOfRange, UnsupportedForGrids, ValidationError


def codes(report):
    return [c for c, _ in D.validate(report)]


class TestValidate:
    def test_valid_categorical(self):
        assert codes(D.Categorical([0.2, 0.5, 0.3])) == []

    def test_sum_not_one(self):
        assert "SumNotOne" in codes(D.Categorical([0.5, 0.6]))

    def test_non_monotone_grid(self):
        g = D.QuantileGrid([0.25, 0.5, 0.75], [0.3, 0.2, 0.5])
        assert "NonMonotoneQuantiles" in codes(g)

    def test_probability_out_of_range(self):
        assert "ProbabilityOutOfRange" in codes(D.Binary(1.5))

    def test_non_finite(self):
        assert "NonFiniteValue" in codes(D.Normal(float("nan"), 1.0))

    def test_bad_parameter(self):
        assert "BadParameter" in codes(D.Beta(0.0, 1.0))
        assert "BadParameter" in codes(D.Uniform(1.0, 1.0))

    def test_ensure_valid_raises_with_codes(self):
        with pytest.raises(ValidationError) as info:
            D.ensure_valid(D.Categorical([0.5, 0.6]))
        assert info.value.codes == ["SumNotOne"]


class TestCdfQuantile:
    @pytest.mark.parametrize(
        "dist, x, want",
        [(D.Normal(0, 1), 0.0, 0.5), (D.Uniform(0, 1), 0.3, 0.3), (D.Beta(2, 2), 0.5, 0.5)],
    )
    def test_cdf_examples(self, dist, x, want):
        assert D.cdf_eval(dist, x) == pytest.approx(want, abs=1e-15)

    @pytest.mark.parametrize(
        "dist, tau, want",
        [(D.Uniform(0, 1), 0.25, 0.25), (D.Normal(1, 2), 0.5, 1.0), (D.Beta(2, 2), 0.5, 0.5)],
    )
    def test_quantile_examples(self, dist, tau, want):
        assert D.quantile_eval(dist, tau) == pytest.approx(want, abs=1e-12)

    def test_tau_out_of_range(self):
        with pytest.raises(TauOutOfRange):
            D.quantile_eval(D.Normal(0, 1), 1.0)

    def test_grid_has_no_pdf(self):
        g = D.to_quantile_grid(D.Normal(0, 1), D.GridSpec(9))
        with pytest.raises(UnsupportedForGrids):
            D.pdf_eval(g, 0.0)

    def test_grid_cdf_atoms_and_clamping(self):
        g = D.QuantileGrid([0.25, 0.5, 0.75], [1.0, 2.0, 3.0])
        assert D.cdf_eval(g, 0.5) == 0.0
        assert D.cdf_eval(g, 1.0) == 0.25
        assert D.cdf_eval(g, 1.5) == pytest.approx(0.375)
        assert D.cdf_eval(g, 3.0) == 1.0


class TestGrid:
    def test_uniform_three_levels(self):
        g = D.to_quantile_grid(D.Uniform(0, 1), D.GridSpec(3))
        np.testing.assert_allclose(g.taus, [0.25, 0.5, 0.75])
        np.testing.assert_allclose(g.values, [0.25, 0.5, 0.75])

    def test_normal_symmetric(self):
        v = D.to_quantile_grid(D.Normal(0, 1)).values
        np.testing.assert_allclose(v, -v[::-1], atol=1e-12)

    def test_beta_median_against_root_finding(self):
        # oracle: solve I_x(2, 5) = 1/2 directly
        oracle = optimize.brentq(lambda x: special.betainc(2, 5, x) - 0.5, 0, 1, xtol=1e-15)
        g = D.to_quantile_grid(D.Beta(2, 5))
        assert g.values[499] == pytest.approx(oracle, abs=1e-12)
        assert oracle == pytest.approx(0.2644, abs=1e-4)

    def test_same_taus_returns_same_grid(self):
        g = D.to_quantile_grid(D.Normal(0, 1), D.GridSpec(19))
        assert D.to_quantile_grid(g, D.GridSpec(19)) is g

    @settings(max_examples=50, deadline=None)
    @given(
        st.floats(-5, 5),
        st.floats(0.05, 5),
        st.integers(2, 400),
    )
    def test_grid_monotone_and_round_trips(self, mu, sigma, size):
        g = D.to_quantile_grid(D.Normal(mu, sigma), D.GridSpec(size))
        assert np.all(np.diff(g.values) >= 0)
        assert D.report_from_dict(D.report_to_dict(g)) == g


class TestSampling:
    def test_categorical_is_one_based(self):
        rng = np.random.Generator(np.random.Philox(1))
        draws = D.sample(D.Categorical([0.0, 0.0, 1.0]), rng, 100)
        assert set(np.unique(draws)) == {3}

    def test_binary_frequency(self):
        rng = np.random.Generator(np.random.Philox(2))
        draws = D.sample(D.Binary(0.3), rng, 200000)
        assert draws.mean() == pytest.approx(0.3, abs=0.005)


@pytest.mark.parametrize(
    "report",
    [
        D.Binary(0.3),
        D.Categorical([0.2, 0.5, 0.3]),
        D.Beta(2.0, 5.0),
        D.Normal(1.0, 2.0),
        D.Uniform(0.0, 1.0),
        D.QuantileGrid([0.25, 0.5, 0.75], [0.1, 0.2, 0.4], support=(0.0, 1.0)),
    ],
)
def test_dict_round_trip(report):
    assert D.report_from_dict(D.report_to_dict(report)) == report
