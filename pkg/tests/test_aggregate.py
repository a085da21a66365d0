import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from wagermarket import dist as D
from wagermarket.aggregate import (
    barycenter_objective,
    grid_moments,
    lop,
    mixture_cdf,
    normalize_wagers,
    qa,
    wasserstein2,
)
from wagermarket.errors import LengthMismatch, MixedForms, NonPositiveWager

SPEC = D.GridSpec(999)


@pytest.mark.parametrize(
    "wagers, want",
    [((100, 100, 100), (1 / 3,) * 3), ((100, 100, 500), (1 / 7, 1 / 7, 5 / 7)), ((40, 60), (0.4, 0.6))],
)
def test_normalize_wagers(wagers, want):
    np.testing.assert_allclose(normalize_wagers(wagers), want, rtol=0, atol=1e-15)


def test_normalize_rejects_nonpositive():
    with pytest.raises(NonPositiveWager):
        normalize_wagers([1.0, 0.0])


class TestLop:
    def test_categorical(self):
        out = lop([D.Categorical([0.2, 0.8]), D.Categorical([0.6, 0.4])], [0.5, 0.5])
        np.testing.assert_allclose(out.probs, [0.4, 0.6])

    def test_binary(self):
        assert lop([D.Binary(0.2), D.Binary(0.8)], [0.25, 0.75]).p == pytest.approx(0.65)

    def test_category_count_mismatch(self):
        with pytest.raises(LengthMismatch):
            lop([D.Categorical([0.5, 0.5]), D.Categorical([0.2, 0.3, 0.5])], [0.5, 0.5])

    def test_mixed_forms(self):
        with pytest.raises(MixedForms):
            lop([D.Binary(0.5), D.Normal(0, 1)], [0.5, 0.5])

    def test_bimodal_mixture_median(self):
        reports = [D.Normal(0, 1), D.Normal(4, 1)]
        g = lop(reports, [0.5, 0.5], SPEC)
        assert g.values[499] == pytest.approx(2.0, abs=1e-10)
        # oracle: integrate the mixture density up to 2
        dens = lambda x: 0.5 * stats.norm.pdf(x) + 0.5 * stats.norm.pdf(x, 4)  # noqa: E731
        assert integrate.quad(dens, -np.inf, 2)[0] == pytest.approx(0.5, abs=1e-12)

    def test_grid_inverts_mixture_cdf(self):
        reports = [D.Beta(2, 5), D.Beta(6, 2), D.Uniform(0.2, 0.9)]
        w = normalize_wagers([1, 2, 3])
        g = lop(reports, w, SPEC)
        np.testing.assert_allclose(mixture_cdf(reports, w, g.values), SPEC.taus, atol=1e-12)

    def test_idempotent(self):
        g = lop([D.Normal(1, 2)] * 3, normalize_wagers([1, 5, 2]), SPEC)
        np.testing.assert_allclose(g.values, D.Normal(1, 2).ppf(SPEC.taus), atol=1e-9)


class TestQa:
    def test_location_scale_closure(self):
        g = qa([D.Normal(0, 1), D.Normal(2, 3)], [0.5, 0.5], SPEC)
        np.testing.assert_allclose(g.values, D.Normal(1, 2).ppf(SPEC.taus), atol=1e-6)

    def test_uniform_average(self):
        g = qa([D.Uniform(0, 1), D.Uniform(1, 3)], [0.5, 0.5], SPEC)
        np.testing.assert_allclose(g.values, D.Uniform(0.5, 2).ppf(SPEC.taus), atol=1e-12)

    def test_idempotent(self):
        r = D.Beta(3, 4)
        np.testing.assert_allclose(qa([r, r], [0.3, 0.7], SPEC).values, D.to_quantile_grid(r, SPEC).values, atol=1e-15)

    def test_needs_continuous(self):
        with pytest.raises(MixedForms):
            qa([D.Binary(0.5), D.Binary(0.2)], [0.5, 0.5])

    def test_grids_on_different_levels(self):
        a = D.to_quantile_grid(D.Normal(0, 1), D.GridSpec(9))
        b = D.to_quantile_grid(D.Normal(0, 1), D.GridSpec(19))
        with pytest.raises(MixedForms):
            qa([a, b], [0.5, 0.5])

    def test_permutation_invariant_bitwise(self):
        reports = [D.Beta(2, 5), D.Beta(6, 2), D.Beta(1.1, 1)]
        w = normalize_wagers([3, 1, 7])
        ref = qa(reports, w, SPEC).values
        for perm in ([2, 0, 1], [1, 2, 0], [2, 1, 0]):
            got = qa([reports[i] for i in perm], w[perm], SPEC).values
            assert np.array_equal(got, ref)

    @settings(max_examples=25, deadline=None)
    @given(st.lists(st.tuples(st.floats(-3, 3), st.floats(0.2, 3), st.floats(0.5, 10)), min_size=2, max_size=4))
    def test_sharper_than_lop(self, params):
        reports = [D.Normal(m, s) for m, s, _ in params]
        w = normalize_wagers([x for _, _, x in params])
        v_qa = grid_moments(qa(reports, w, SPEC))[1]
        v_lop = grid_moments(lop(reports, w, SPEC))[1]
        assert v_qa <= v_lop * (1 + 1e-9)


class TestWasserstein:
    def test_zero_for_identical(self):
        assert wasserstein2(D.Normal(0, 1), D.Normal(0, 1), SPEC) == 0.0

    def test_translation(self):
        assert wasserstein2(D.Normal(0, 1), D.Normal(2, 1), SPEC) == pytest.approx(2.0, abs=1e-12)

    def test_uniform_scale(self):
        assert wasserstein2(D.Uniform(0, 1), D.Uniform(0, 3), SPEC) == pytest.approx(2 / math.sqrt(3), abs=5e-5)

    def test_barycenter_beats_perturbations(self):
        rng = np.random.Generator(np.random.Philox(11))
        spec = D.GridSpec(199)
        for _ in range(20):
            k = int(rng.integers(2, 4))
            reports = [D.Normal(rng.uniform(-2, 2), rng.uniform(0.3, 2)) for _ in range(k)]
            w = normalize_wagers(rng.uniform(1, 5, k))
            center = qa(reports, w, spec)
            best = barycenter_objective(center, reports, w, spec)
            for _ in range(50):
                noise = np.sort(center.values + rng.normal(0, 0.05, spec.size))
                other = D.QuantileGrid(spec.taus, noise)
                assert best <= barycenter_objective(other, reports, w, spec) + 1e-12
