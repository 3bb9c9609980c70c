import math

import numpy as np
import pytest
from scipy.stats import multivariate_normal, norm, poisson

from dmbpp.bernstein import enumerate_H0, mbp_mixture_log_density
from dmbpp.model import (CATEGORIES, AtomCoeffs, Dataset, ModelState,
                         PriorConfig, SelectionIndicators, WeightCoeffs,
                         aggregated_weights, conditional_log_density,
                         link_atom, link_atom_inv, link_weight, log_prior,
                         stick_weights, truncated_poisson_logpmf)
from dmbpp.simplex import simplex_grid, simplex_quadrature

from conftest import random_state


class TestLinks:
    def test_link_weight_values(self):
        assert link_weight(0.0) == pytest.approx(0.5, abs=1e-15)
        assert link_weight(math.log(3.0)) == pytest.approx(0.75, abs=1e-12)
        assert isinstance(link_weight(0.3), float)

    def test_link_weight_saturation(self):
        assert link_weight(1000.0) == 1.0
        assert link_weight(-1000.0) == 0.0

    def test_link_atom_values(self):
        np.testing.assert_allclose(link_atom([0.0, 0.0]), [1/3, 1/3],
                                   rtol=1e-12)
        np.testing.assert_allclose(link_atom([math.log(2.0), 0.0]),
                                   [0.5, 0.25], rtol=1e-12)

    def test_link_atom_large_values_stable(self):
        out = link_atom([900.0, 0.0])
        assert np.all(np.isfinite(out))
        np.testing.assert_allclose(out, [1.0, 0.0], atol=1e-12)

    def test_link_atom_batch_shape(self):
        z = np.zeros((4, 3, 2))
        out = link_atom(z)
        assert out.shape == z.shape
        np.testing.assert_allclose(out, 1/3, rtol=1e-12)

    def test_link_atom_inv_roundtrip(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            theta = rng.dirichlet([2, 2, 2])[:2]
            back = link_atom(link_atom_inv(theta))
            np.testing.assert_allclose(back, theta, atol=1e-10)

    def test_link_atom_inv_rejects_boundary(self):
        with pytest.raises(ValueError, match="interior"):
            link_atom_inv(np.array([0.0, 0.5]))
        with pytest.raises(ValueError, match="interior"):
            link_atom_inv(np.array([0.5, 0.5]))


class TestStickWeights:
    def test_hand_values(self):
        np.testing.assert_allclose(stick_weights([0.5, 0.5, 1.0]),
                                   [0.5, 0.25, 0.25], rtol=1e-15)

    def test_first_stick_one_collapses(self):
        np.testing.assert_array_equal(stick_weights([1.0, 0.3, 0.7]),
                                      [1.0, 0.0, 0.0])

    def test_single_component(self):
        np.testing.assert_array_equal(stick_weights([0.23]), [1.0])

    def test_last_entry_ignored(self):
        a = stick_weights([0.4, 0.2, 0.99])
        b = stick_weights([0.4, 0.2, 0.01])
        np.testing.assert_array_equal(a, b)

    def test_python_sum_is_exactly_one(self):
        rng = np.random.default_rng(101)
        for _ in range(200):
            v = rng.random(int(rng.integers(1, 25)))
            w = stick_weights(v)
            assert sum(w.tolist()) == 1.0
            assert np.all(w >= 0)


class TestTruncatedPoisson:
    def test_matches_renormalized_poisson(self):
        for lam in (0.5, 25.0):
            for k in (1, 2, 25, 60):
                want = poisson.logpmf(k, lam) - math.log1p(-math.exp(-lam))
                assert truncated_poisson_logpmf(k, lam) == pytest.approx(
                    want, rel=1e-12)

    def test_zero_gets_no_mass(self):
        assert truncated_poisson_logpmf(0, 25.0) == -np.inf

    def test_normalizes(self):
        total = sum(math.exp(truncated_poisson_logpmf(k, 3.0))
                    for k in range(1, 80))
        assert total == pytest.approx(1.0, abs=1e-12)


class TestSelectionPrior:
    def test_category_order(self):
        assert CATEGORIES == ((1, 1), (0, 1), (1, 0), (0, 0))

    def test_values_t2(self, small_prior):
        np.testing.assert_allclose(small_prior.selection_probs,
                                   [0.25, 0.125, 0.125, 0.5], rtol=1e-15)

    def test_values_t10(self, small_data):
        prior = PriorConfig.from_design(small_data.x, t=10.0)
        np.testing.assert_allclose(prior.selection_probs,
                                   [0.01, 0.045, 0.045, 0.9], rtol=1e-12)

    def test_sums_to_one_generally(self, small_data):
        for t in (1.5, 2.0, 7.3, 50.0):
            prior = PriorConfig.from_design(small_data.x, t=t)
            assert prior.selection_probs.sum() == pytest.approx(1.0,
                                                                abs=1e-12)


class TestDataset:
    def test_shapes_and_derived_fields(self, small_data):
        assert (small_data.n, small_data.m, small_data.p) == (60, 2, 1)
        np.testing.assert_allclose(small_data.yfull.sum(axis=1), 1.0,
                                   atol=1e-12)

    def test_row_mismatch(self):
        with pytest.raises(ValueError, match="design rows"):
            Dataset(y=np.full((3, 2), 0.3), x=np.zeros((2, 1)))

    def test_bad_composition_names_row(self):
        y = np.full((3, 2), 0.3)
        y[1, 0] = -0.1
        with pytest.raises(ValueError, match="row 1"):
            Dataset(y=y, x=np.zeros((3, 1)))

    def test_nonfinite_design(self):
        with pytest.raises(ValueError, match="non-finite"):
            Dataset(y=np.full((2, 2), 0.3), x=np.array([[0.1], [np.nan]]))


class TestPriorConfigValidation:
    def test_tau_ordering(self, small_data):
        with pytest.raises(ValueError, match="tau1_eta"):
            PriorConfig.from_design(small_data.x, tau1_eta=5.0, tau2_eta=1.0)

    def test_t_must_exceed_one(self, small_data):
        with pytest.raises(ValueError, match="t must exceed 1"):
            PriorConfig.from_design(small_data.x, t=1.0)

    def test_rank_deficient_design(self):
        x = np.ones((10, 2))          # duplicated column
        with pytest.raises(ValueError, match="rank deficient"):
            PriorConfig.from_design(x)

    def test_xtx_inverse_pair(self, small_prior):
        np.testing.assert_allclose(
            small_prior.XtX @ small_prior.XtX_inv,
            np.eye(small_prior.p), atol=1e-10)


class TestConditionalDensity:
    def test_zero_slopes_make_density_x_free(self):
        rng = np.random.default_rng(88)
        st = random_state(rng, N=5, k=6, coeff_scale=0.8)
        st.weights_coeffs.beta_eta[:] = 0.0
        st.atom_coeffs.beta_z[:] = 0.0
        y = np.array([0.3, 0.45])
        a = conditional_log_density(y, np.array([0.1]), st)
        b = conditional_log_density(y, np.array([0.9]), st)
        assert a == b                      # bitwise: same floats throughout

    def test_single_component_is_one_dirichlet(self):
        rng = np.random.default_rng(12)
        st = random_state(rng, N=1, k=5)
        x = np.array([0.4])
        w = aggregated_weights(x, st)
        assert list(w.values()) == [1.0]
        (j,) = w.keys()
        y = np.array([0.2, 0.3])
        want = mbp_mixture_log_density(y, st.k, {j: 1.0})
        assert conditional_log_density(y, x, st) == pytest.approx(
            want, rel=1e-12)

    def test_matches_lattice_aggregation(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            st = random_state(rng, coeff_scale=1.2)
            x = rng.random(1)
            agg = aggregated_weights(x, st)
            assert sum(agg.values()) == pytest.approx(1.0, abs=1e-12)
            for _ in range(3):
                y = rng.dirichlet([2, 2, 2])[:2]
                assert conditional_log_density(y, x, st) == pytest.approx(
                    mbp_mixture_log_density(y, st.k, agg), rel=1e-10)

    def test_vector_input_matches_scalar(self):
        rng = np.random.default_rng(9)
        st = random_state(rng, N=4, k=3)
        x = np.array([0.7])
        ys = np.array([[0.2, 0.3], [0.5, 0.1], [0.05, 0.9]])
        batch = conditional_log_density(ys, x, st)
        for i in range(len(ys)):
            assert batch[i] == conditional_log_density(ys[i], x, st)

    def test_normalizes_on_fine_grid(self):
        rng = np.random.default_rng(21)
        grid = simplex_grid(0.005)
        for _ in range(3):
            st = random_state(rng, coeff_scale=1.5)
            x = rng.random(1)
            logd = conditional_log_density(grid.points, x, st)
            assert simplex_quadrature(np.exp(logd), grid) == pytest.approx(
                1.0, rel=0.02)

    def test_boundary_point_neginf_when_exponents_positive(self):
        rng = np.random.default_rng(33)
        st = random_state(rng, N=1, k=8)
        st.atom_coeffs.beta0_z[:] = 2.0   # theta ~ (0.47, 0.47) -> alpha (4,4,2)
        st.atom_coeffs.beta_z[:] = 0.0
        x = np.array([0.5])
        assert tuple(next(iter(aggregated_weights(x, st)))) == (4, 4)
        assert conditional_log_density(np.array([0.0, 0.5]), x, st) == -np.inf
        assert conditional_log_density(np.array([0.5, 0.5]), x, st) == -np.inf

    def test_boundary_point_finite_when_unit_exponent(self):
        rng = np.random.default_rng(34)
        st = random_state(rng, N=1, k=8)
        st.atom_coeffs.beta0_z[:] = [-3.0, 1.5]   # first coordinate near 0
        st.atom_coeffs.beta_z[:] = 0.0
        x = np.array([0.5])
        j = tuple(next(iter(aggregated_weights(x, st))))
        assert j[0] == 1                 # unit exponent on the first part
        out = conditional_log_density(np.array([0.0, 0.5]), x, st)
        assert np.isfinite(out)


class TestLogPrior:
    @staticmethod
    def _oracle(st, prior):
        lp = (poisson.logpmf(st.k, prior.lam)
              - math.log1p(-math.exp(-prior.lam)))
        lp += math.log(
            prior.selection_probs[CATEGORIES.index(st.gammas.as_tuple())])
        lp += norm.logpdf(st.weights_coeffs.beta0_eta, 0,
                          math.sqrt(prior.sigma2_eta)).sum()
        lp += norm.logpdf(st.atom_coeffs.beta0_z.ravel(), 0,
                          math.sqrt(prior.sigma2_z)).sum()
        te = prior.tau_eta(st.gammas.gamma_eta)
        tz = prior.tau_z(st.gammas.gamma_z)
        for j in range(st.N):
            lp += multivariate_normal.logpdf(
                st.weights_coeffs.beta_eta[j], cov=te * prior.XtX_inv)
            for l in range(st.m):
                lp += multivariate_normal.logpdf(
                    st.atom_coeffs.beta_z[j, l], cov=tz * prior.XtX_inv)
        return lp

    def test_matches_scipy_oracle_all_categories(self):
        rng = np.random.default_rng(14)
        x = rng.random((40, 2))
        prior = PriorConfig.from_design(x, N=3)
        for ge, gz in CATEGORIES:
            st = random_state(rng, N=3, k=4, p=2)
            st.gammas = SelectionIndicators(ge, gz)
            assert log_prior(st, prior) == pytest.approx(
                self._oracle(st, prior), rel=1e-10)

    def test_bits_only_switch_slope_covariance(self):
        rng = np.random.default_rng(15)
        x = rng.random((30, 1))
        prior = PriorConfig.from_design(x, N=2)
        st = random_state(rng, N=2, k=3)
        st.gammas = SelectionIndicators(0, 0)
        base = log_prior(st, prior)
        st2 = st.copy()
        st2.gammas = SelectionIndicators(1, 0)
        # difference = category log-odds + per-block MVN ratio, slopes fixed
        delta = log_prior(st2, prior) - base
        probs = prior.selection_probs
        want = math.log(probs[2] / probs[3])
        for j in range(st.N):
            b = st.weights_coeffs.beta_eta[j]
            want += (multivariate_normal.logpdf(
                         b, cov=prior.tau2_eta * prior.XtX_inv)
                     - multivariate_normal.logpdf(
                         b, cov=prior.tau1_eta * prior.XtX_inv))
        assert delta == pytest.approx(want, rel=1e-10)


class TestStateValidation:
    def test_allocation_range_checked(self):
        rng = np.random.default_rng(2)
        st = random_state(rng, N=3)
        with pytest.raises(ValueError, match="1..N"):
            ModelState(st.k, st.weights_coeffs, st.atom_coeffs, st.gammas,
                       np.array([0]))

    def test_truncation_levels_must_agree(self):
        wc = WeightCoeffs(np.zeros(3), np.zeros((3, 1)))
        ac = AtomCoeffs(np.zeros((2, 2)), np.zeros((2, 2, 1)))
        with pytest.raises(ValueError, match="truncation"):
            ModelState(2, wc, ac, SelectionIndicators(0, 0),
                       np.empty(0, dtype=np.int64))

    def test_degree_bounds(self):
        wc = WeightCoeffs(np.zeros(1), np.zeros((1, 1)))
        ac = AtomCoeffs(np.zeros((1, 2)), np.zeros((1, 2, 1)))
        with pytest.raises(ValueError, match="degree"):
            ModelState(0, wc, ac, SelectionIndicators(0, 0),
                       np.empty(0, dtype=np.int64))

    def test_copy_is_deep(self):
        rng = np.random.default_rng(4)
        st = random_state(rng, n=5, N=2)
        cp = st.copy()
        cp.weights_coeffs.beta0_eta[0] += 1.0
        cp.allocations[0] = 2
        assert st.weights_coeffs.beta0_eta[0] != cp.weights_coeffs.beta0_eta[0]

    def test_bad_gamma_rejected(self):
        with pytest.raises(ValueError, match="0 or 1"):
            SelectionIndicators(2, 0)
