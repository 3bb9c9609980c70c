import math

import numpy as np
import pytest
from scipy.special import expit

from dmbpp.bernstein import alpha_of, ceil_index
from dmbpp.kernels import load_backend
from dmbpp.model import (CATEGORIES, Dataset, PriorConfig,
                         SelectionIndicators, link_atom, log_prior,
                         stick_weights, truncated_poisson_logpmf)
from dmbpp.sampler import (ChainConfig, DegenerateAllocationError,
                           PosteriorSamples, _allocations_with_retry,
                           gamma_category_posterior, run_chain,
                           update_allocations, update_coefficients_slice,
                           update_degree_mh, update_gammas)
from dmbpp.simplex import dirichlet_log_density

from conftest import random_state


class TestChainConfig:
    def test_retained_count(self):
        cfg = ChainConfig(n_iter=110, burn_in=10, thin=10, seed=1)
        assert cfg.n_retained == 10

    def test_single_retained_state(self):
        cfg = ChainConfig(n_iter=7, burn_in=3, thin=4, seed=1)
        assert cfg.n_retained == 1

    @pytest.mark.parametrize("kw,msg", [
        (dict(n_iter=0, burn_in=0, thin=1, seed=1), "n_iter"),
        (dict(n_iter=10, burn_in=10, thin=1, seed=1), "burn_in"),
        (dict(n_iter=10, burn_in=0, thin=0, seed=1), "thin"),
        (dict(n_iter=10, burn_in=0, thin=1, seed=-1), "seed"),
        (dict(n_iter=10, burn_in=0, thin=1, seed=2 ** 64), "seed"),
        (dict(n_iter=10, burn_in=0, thin=1, seed=1, slice_width=0.0),
         "slice_width"),
    ])
    def test_validation(self, kw, msg):
        with pytest.raises(ValueError, match=msg):
            ChainConfig(**kw)


class TestAllocations:
    def test_single_component_all_ones(self, small_data):
        rng = np.random.default_rng(1)
        st = random_state(rng, n=small_data.n, N=1)
        out = update_allocations(st, small_data, np.random.default_rng(2))
        assert np.all(out.allocations == 1)

    def test_deterministic_when_one_component_dead(self):
        # k = 2 with one atom pinned near a vertex: a boundary-zero row has
        # finite likelihood only under the component with a unit exponent
        rng = np.random.default_rng(3)
        st = random_state(rng, n=1, N=2, k=2, coeff_scale=0.0)
        st.atom_coeffs.beta0_z[0] = [4.0, -1.0]   # theta1 ~ (.98,.006): j=(2,1)
        st.atom_coeffs.beta0_z[1] = [-4.0, 1.0]   # theta2 ~ (.005,.72): j=(1,2)
        data = Dataset(y=np.array([[0.0, 0.6]]), x=np.zeros((1, 1)))
        for trial in range(20):
            out = update_allocations(st, data, np.random.default_rng(trial))
            assert out.allocations[0] == 2

    def test_probabilities_match_brute_force(self, small_data):
        from dmbpp.sampler import _likelihood_parts

        rng = np.random.default_rng(7)
        st = random_state(rng, n=small_data.n, N=3, k=5)
        logw, logl = _likelihood_parts(small_data, st)
        tot = logw + logl
        p = np.exp(tot - tot.max(axis=1, keepdims=True))
        p /= p.sum(axis=1, keepdims=True)
        np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-12)
        wc, ac = st.weights_coeffs, st.atom_coeffs
        for i in range(0, small_data.n, 13):
            x = small_data.x[i]
            v = expit(wc.beta0_eta + wc.beta_eta @ x)
            w = stick_weights(v)
            logs = np.empty(3)
            for j in range(3):
                theta = link_atom(ac.beta0_z[j] + ac.beta_z[j] @ x)
                a = alpha_of(st.k, ceil_index(st.k, theta))
                logs[j] = math.log(w[j]) + dirichlet_log_density(
                    small_data.y[i], a)
            want = np.exp(logs - logs.max())
            want /= want.sum()
            np.testing.assert_allclose(p[i], want, atol=1e-12)

    def test_degenerate_error_names_observation(self):
        rng = np.random.default_rng(8)
        st = random_state(rng, n=2, N=2, k=8, coeff_scale=0.0)
        st.atom_coeffs.beta0_z[:] = 2.0      # every alpha exponent positive
        data = Dataset(y=np.array([[0.3, 0.4], [0.0, 0.5]]),
                       x=np.zeros((2, 1)))
        with pytest.raises(DegenerateAllocationError, match="observation 1"):
            update_allocations(st, data, np.random.default_rng(0))

    def test_retry_falls_back_to_degree_one(self):
        rng = np.random.default_rng(9)
        st = random_state(rng, n=1, N=2, k=8, coeff_scale=0.0)
        st.atom_coeffs.beta0_z[:] = 2.0
        data = Dataset(y=np.array([[0.0, 0.5]]), x=np.zeros((1, 1)))
        prior = PriorConfig(XtX_inv=np.eye(1), N=2)
        diag = {}
        out = _allocations_with_retry(st, data, prior,
                                      np.random.default_rng(1), 3, diag)
        assert out.k == 1
        assert diag["degenerate_fallbacks"] == 1
        assert diag["degenerate_retries"] >= 1
        assert out.allocations[0] in (1, 2)


class TestGammaUpdate:
    def test_posterior_matches_log_prior_enumeration(self):
        rng = np.random.default_rng(10)
        x = rng.random((25, 2))
        prior = PriorConfig.from_design(x, N=4)
        for _ in range(50):
            st = random_state(rng, N=4, p=2, coeff_scale=2.0)
            got = gamma_category_posterior(st, prior)
            logs = np.empty(4)
            for c, (ge, gz) in enumerate(CATEGORIES):
                alt = st.copy()
                alt.gammas = SelectionIndicators(ge, gz)
                logs[c] = log_prior(alt, prior)
            want = np.exp(logs - logs.max())
            want /= want.sum()
            np.testing.assert_allclose(got, want, atol=1e-12)
            assert got.sum() == pytest.approx(1.0, abs=1e-12)

    def test_equal_scales_reduce_to_prior(self, small_data):
        prior = PriorConfig.from_design(
            small_data.x, tau1_eta=7.0, tau2_eta=7.0,
            tau1_z=0.4, tau2_z=0.4, t=2.0, N=3)
        rng = np.random.default_rng(11)
        st = random_state(rng, N=3, coeff_scale=3.0)
        np.testing.assert_allclose(gamma_category_posterior(st, prior),
                                   [0.25, 0.125, 0.125, 0.5], atol=1e-14)

    def test_zero_slopes_favor_spike_category(self, small_data):
        prior = PriorConfig.from_design(small_data.x, N=3)
        rng = np.random.default_rng(12)
        st = random_state(rng, N=3, coeff_scale=1.0)
        st.weights_coeffs.beta_eta[:] = 0.0
        st.atom_coeffs.beta_z[:] = 0.0
        probs = gamma_category_posterior(st, prior)
        assert probs.argmax() == CATEGORIES.index((0, 0))

    def test_draw_frequencies_match_posterior(self, small_data):
        prior = PriorConfig.from_design(
            small_data.x, tau1_eta=1.0, tau2_eta=1.0,
            tau1_z=1.0, tau2_z=1.0, t=2.0, N=2)
        rng = np.random.default_rng(13)
        st = random_state(rng, N=2)
        draws = np.random.default_rng(99)
        counts = np.zeros(4)
        n = 4000
        for _ in range(n):
            out = update_gammas(st, prior, draws)
            counts[CATEGORIES.index(out.gammas.as_tuple())] += 1
        freq = counts / n
        want = np.array([0.25, 0.125, 0.125, 0.5])
        se = np.sqrt(want * (1 - want) / n)
        assert np.all(np.abs(freq - want) < 3 * se)


class TestDegreeMove:
    def test_boundary_proposal_only_neighbor(self):
        rng = np.random.default_rng(14)
        prior = PriorConfig(XtX_inv=np.eye(1), lam=25.0, N=2)
        st = random_state(rng, N=2, k=1)
        empty = Dataset(y=np.empty((0, 2)), x=np.empty((0, 1)))
        # lam=25: prior ratio 12.5, window correction 1/2 -> always accept
        for trial in range(25):
            out = update_degree_mh(st, empty, prior,
                                   np.random.default_rng(trial), halfwidth=1)
            assert out.k == 2

    def test_boundary_acceptance_rate_matches_correction(self):
        # lam=1: move 1 -> 2 accepts with (lam/2) * (1/2) = 0.25 exactly
        rng = np.random.default_rng(15)
        prior = PriorConfig(XtX_inv=np.eye(1), lam=1.0, N=2)
        st = random_state(rng, N=2, k=1)
        empty = Dataset(y=np.empty((0, 2)), x=np.empty((0, 1)))
        draws = np.random.default_rng(2718)
        n, acc = 4000, 0
        for _ in range(n):
            out = update_degree_mh(st, empty, prior, draws, halfwidth=1)
            acc += out.k == 2
        want = 0.25
        se = math.sqrt(want * (1 - want) / n)
        assert abs(acc / n - want) < 3 * se

    def test_poisson_ratio_flat_at_lambda(self):
        assert truncated_poisson_logpmf(25, 25.0) == pytest.approx(
            truncated_poisson_logpmf(24, 25.0), abs=1e-12)

    def test_diagnostics_counters(self, small_data, small_prior):
        rng = np.random.default_rng(16)
        st = random_state(rng, n=small_data.n, N=8, k=10)
        diag = {}
        for _ in range(10):
            st = update_degree_mh(st, small_data, small_prior,
                                  rng, diagnostics=diag)
        assert diag["k_proposals"] == 10
        assert 0 <= diag["k_accepts"] <= 10


class TestSliceSampler:
    def test_standard_normal_target(self):
        NP = load_backend("numpy")
        rng = np.random.default_rng(2024)
        cur, draws, fails = 0.0, [], 0
        for _ in range(10_000):
            cur, f = NP._slice_scalar(cur, lambda v: -0.5 * v * v,
                                      1.0, 10, rng)
            fails += f
            draws.append(cur)
        draws = np.asarray(draws)
        assert fails == 0
        assert abs(draws.mean()) < 0.05
        assert abs(draws.var() - 1.0) < 0.1

    def test_unallocated_atom_block_samples_its_prior(self, small_data):
        # component 2 never owns a row, so its coefficients follow the prior
        sub = Dataset(y=small_data.y[:6], x=small_data.x[:6])
        prior = PriorConfig.from_design(
            sub.x, sigma2_eta=1.0, sigma2_z=1.0,
            tau1_eta=0.5, tau2_eta=2.0, tau1_z=0.5, tau2_z=2.0, N=2)
        rng = np.random.default_rng(17)
        st = random_state(rng, n=6, N=2, k=3, coeff_scale=0.3)
        st.allocations[:] = 1
        st.gammas = SelectionIndicators(0, 1)       # slab on locations
        moves = np.random.default_rng(31415)
        b0_draws, slope_draws = [], []
        for _ in range(8000):
            st = update_coefficients_slice(st, sub, prior, moves)
            b0_draws.append(st.atom_coeffs.beta0_z[1, 0])
            slope_draws.append(st.atom_coeffs.beta_z[1, 0, 0])
        b0_draws = np.asarray(b0_draws)
        slope_draws = np.asarray(slope_draws)
        assert abs(b0_draws.mean()) < 0.05                  # prior N(0, 1)
        assert abs(b0_draws.var() - 1.0) < 0.05
        slope_var = float(prior.tau2_z * prior.XtX_inv[0, 0])
        assert abs(slope_draws.mean()) < 0.05 * math.sqrt(slope_var)
        assert abs(slope_draws.var() / slope_var - 1.0) < 0.05

    def test_failures_counter_stays_zero_on_smooth_target(self, small_data,
                                                          small_prior):
        rng = np.random.default_rng(18)
        st = random_state(rng, n=small_data.n, N=8, k=4)
        diag = {}
        update_coefficients_slice(st, small_data, small_prior,
                                  np.random.default_rng(5), failures=diag)
        assert diag["slice_failures_weights"] == 0
        assert diag["slice_failures_atoms"] == 0


class TestRunChain:
    def test_deterministic_given_seed(self, small_data, small_prior):
        cfg = ChainConfig(n_iter=60, burn_in=20, thin=4, seed=4242)
        a = run_chain(small_data, small_prior, cfg)
        b = run_chain(small_data, small_prior, cfg)
        np.testing.assert_array_equal(a.loglik_matrix, b.loglik_matrix)
        np.testing.assert_array_equal(a.k_trace, b.k_trace)
        np.testing.assert_array_equal(a.gamma_trace, b.gamma_trace)
        assert (a.diagnostics["log_posterior_trace"]
                == b.diagnostics["log_posterior_trace"])
        for sa, sb in zip(a.states, b.states):
            np.testing.assert_array_equal(
                sa.weights_coeffs.beta_eta, sb.weights_coeffs.beta_eta)
            np.testing.assert_array_equal(
                sa.atom_coeffs.beta_z, sb.atom_coeffs.beta_z)
            np.testing.assert_array_equal(sa.allocations, sb.allocations)
            assert sa.k == sb.k and sa.gammas.as_tuple() == sb.gammas.as_tuple()

    def test_seed_changes_output(self, small_data, small_prior):
        cfg1 = ChainConfig(n_iter=30, burn_in=10, thin=2, seed=1)
        cfg2 = ChainConfig(n_iter=30, burn_in=10, thin=2, seed=2)
        a = run_chain(small_data, small_prior, cfg1)
        b = run_chain(small_data, small_prior, cfg2)
        assert not np.array_equal(a.loglik_matrix, b.loglik_matrix)

    def test_retained_bookkeeping(self, short_chain):
        assert isinstance(short_chain, PosteriorSamples)
        assert short_chain.n_retained == 20
        assert short_chain.loglik_matrix.shape == (20, 60)
        assert short_chain.k_trace.shape == (20,)
        assert short_chain.gamma_trace.shape == (20, 2)
        assert short_chain.meta["model"] == "dmbpp"
        assert short_chain.meta["backend"] in ("numba", "numpy")

    def test_single_retained_state(self, small_data, small_prior):
        cfg = ChainConfig(n_iter=7, burn_in=3, thin=4, seed=3)
        out = run_chain(small_data, small_prior, cfg)
        assert out.n_retained == 1

    def test_log_posterior_trace_finite(self, short_chain):
        trace = short_chain.diagnostics["log_posterior_trace"]
        assert len(trace) == short_chain.n_retained
        assert np.all(np.isfinite(trace))

    def test_loglik_matrix_finite_for_interior_data(self, short_chain):
        assert np.all(np.isfinite(short_chain.loglik_matrix))

    def test_design_mismatch_rejected(self, small_data):
        prior = PriorConfig(XtX_inv=np.eye(2), N=4)
        cfg = ChainConfig(n_iter=5, burn_in=1, thin=1, seed=1)
        with pytest.raises(ValueError, match="design has 1"):
            run_chain(small_data, prior, cfg)

    def test_initial_state_truncation_mismatch(self, small_data, small_prior):
        rng = np.random.default_rng(19)
        st = random_state(rng, n=small_data.n, N=3)
        cfg = ChainConfig(n_iter=5, burn_in=1, thin=1, seed=1)
        with pytest.raises(ValueError, match="truncation"):
            run_chain(small_data, small_prior, cfg, initial_state=st)

    def test_boundary_data_runs_to_completion(self):
        y = np.array([[0.0, 0.5], [0.3, 0.3], [0.25, 0.5], [0.5, 0.45]])
        x = np.array([[0.1], [0.4], [0.6], [0.9]])
        data = Dataset(y=y, x=x)
        prior = PriorConfig.from_design(x, N=3)
        cfg = ChainConfig(n_iter=40, burn_in=10, thin=2, seed=7)
        out = run_chain(data, prior, cfg)
        assert out.n_retained == 15
        # the zero part admits -inf rows only transiently; retained
        # mixture log-likelihoods never carry NaN
        assert not np.any(np.isnan(out.loglik_matrix))

    def test_no_drift_in_log_posterior_after_burn_in(self, small_data,
                                                     small_prior):
        cfg = ChainConfig(n_iter=1200, burn_in=200, thin=1, seed=31)
        out = run_chain(small_data, small_prior, cfg)
        trace = np.asarray(out.diagnostics["log_posterior_trace"])
        first, second = trace[:500], trace[500:]
        nb = 20
        bm1 = first.reshape(nb, -1).mean(axis=1)
        bm2 = second.reshape(nb, -1).mean(axis=1)
        se = math.sqrt(bm1.var(ddof=1) / nb + bm2.var(ddof=1) / nb)
        assert abs(first.mean() - second.mean()) < 3 * se


@pytest.fixture(scope="module")
def prior_chain():
    empty = Dataset(y=np.empty((0, 2)), x=np.empty((0, 1)))
    prior = PriorConfig(XtX_inv=np.eye(1), lam=25.0, N=2,
                        sigma2_eta=1.0, sigma2_z=1.0)
    cfg = ChainConfig(n_iter=6000, burn_in=500, thin=1, seed=618)
    return run_chain(empty, prior, cfg)


class TestPriorOnlyChain:
    """Empty-data runs exercise every move against the prior alone."""

    def test_degree_marginal_near_prior_mean(self, prior_chain):
        # truncated Poisson(25): mean 25 to within truncation error < 1e-9
        assert abs(prior_chain.k_trace.mean() - 25.0) < 1.0

    def test_gamma_marginal_near_prior(self, prior_chain):
        freq = np.array([
            np.mean([g == c for g in map(tuple, prior_chain.gamma_trace)])
            for c in CATEGORIES])
        want = np.array([0.25, 0.125, 0.125, 0.5])
        assert np.all(np.abs(freq - want) < 0.05)

    def test_intercept_marginal_near_prior(self, prior_chain):
        draws = np.array([s.weights_coeffs.beta0_eta[0]
                          for s in prior_chain.states])
        assert abs(draws.mean()) < 0.08
        assert abs(draws.var() - 1.0) < 0.1
