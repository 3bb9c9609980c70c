"""Blocked Gibbs sampler for the dependent Bernstein-mixture model.

One sweep updates, in fixed order:

1. component memberships (categorical, from weights x component
   likelihoods),
2. every coefficient scalar by univariate slice sampling of its full
   conditional (weight blocks against the stick construction, atom blocks
   against their allocated observations),
3. the polynomial degree by a windowed random-walk Metropolis step,
4. the two selection bits from their conjugate 4-category posterior,
   followed by a scale-coupled flip move (see below).

The scale-coupled flip proposes toggling one selection bit while
rescaling all of its slope blocks by sqrt(tau_new / tau_old).  Under the
mean-zero normal prior the prior ratio and the Jacobian of the rescaling
cancel exactly, so the move accepts on the likelihood change plus the
category-prior odds alone.  Without it, a bit that reaches its diffuse
(slab) state under a predictor-independent truth can never return: the
conjugate update conditions on slopes whose magnitude the slab itself
sustains.  The move is exact (posterior-preserving) Metropolis-Hastings.

All heavy loops run through the selected kernel backend; the Generator
is threaded through kernels and Python alike, so a chain is reproducible
bit-for-bit under a fixed seed and backend.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from . import kernels
from .bernstein import K_CAP
from .model import (
    CATEGORIES,
    AtomCoeffs,
    Dataset,
    ModelState,
    PriorConfig,
    SelectionIndicators,
    WeightCoeffs,
    link_atom_inv,
    log_prior,
    truncated_poisson_logpmf,
)

__all__ = [
    "ChainConfig",
    "PosteriorSamples",
    "DegenerateAllocationError",
    "update_allocations",
    "update_coefficients_slice",
    "update_degree_mh",
    "update_gammas",
    "update_gammas_rescale",
    "gamma_category_posterior",
    "run_chain",
]

MAX_DEGENERATE_RETRIES = 50


class DegenerateAllocationError(RuntimeError):
    """Every component likelihood is -inf for some observation."""

    def __init__(self, observation: int):
        self.observation = int(observation)
        super().__init__(
            f"all component likelihoods are -inf for observation "
            f"{self.observation}; the current degree is incompatible with "
            f"its boundary zeros"
        )


@dataclass
class ChainConfig:
    """MCMC run lengths, seeding, and move tuning."""

    n_iter: int
    burn_in: int
    thin: int
    seed: int
    slice_width: float = 1.0
    slice_max_doublings: int = 10
    k_proposal_halfwidth: int = 3

    def __post_init__(self) -> None:
        if self.n_iter < 1:
            raise ValueError("n_iter must be at least 1")
        if not 0 <= self.burn_in < self.n_iter:
            raise ValueError("need 0 <= burn_in < n_iter")
        if self.thin < 1:
            raise ValueError("thin must be at least 1")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must fit in 64 unsigned bits")
        if self.slice_width <= 0:
            raise ValueError("slice_width must be positive")
        if self.slice_max_doublings < 1:
            raise ValueError("slice_max_doublings must be at least 1")
        if self.k_proposal_halfwidth < 1:
            raise ValueError("k_proposal_halfwidth must be at least 1")

    @property
    def n_retained(self) -> int:
        return (self.n_iter - self.burn_in) // self.thin


@dataclass
class PosteriorSamples:
    """Retained draws plus the per-observation log-likelihood matrix."""

    states: list
    loglik_matrix: np.ndarray          # (T, n)
    gamma_trace: np.ndarray            # (T, 2) ints
    k_trace: np.ndarray                # (T,) ints
    diagnostics: dict = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    @property
    def n_retained(self) -> int:
        return len(self.states)


# ---------------------------------------------------------------------------
# shared per-sweep arrays

_LG_CACHE: dict[int, np.ndarray] = {}


def _lg_table(m: int) -> np.ndarray:
    """gammaln over the integers reachable by any degree <= K_CAP."""
    tab = _LG_CACHE.get(m)
    if tab is None:
        tab = gammaln(np.arange(0, K_CAP + m + 3, dtype=float))
        _LG_CACHE[m] = tab
    return tab


def _weight_predictors(data: Dataset, wc: WeightCoeffs) -> np.ndarray:
    return wc.beta0_eta[None, :] + data.x @ wc.beta_eta.T        # (n, N)


def _atom_predictors(data: Dataset, ac: AtomCoeffs) -> np.ndarray:
    z = ac.beta0_z[None, :, :] + np.einsum(
        "ip,jlp->ijl", data.x, ac.beta_z)                        # (n, N, m)
    return np.ascontiguousarray(z)


def _likelihood_parts(data: Dataset, state: ModelState):
    """(n, N) log stick weights and component log-likelihoods."""
    kern = kernels.active()
    logw = kern.log_stick_from_eta(_weight_predictors(data, state.weights_coeffs))
    theta = kern.theta_from_z(_atom_predictors(data, state.atom_coeffs))
    logl = kern.component_logliks(data.logyfull, theta, state.k,
                                  _lg_table(state.m))
    return logw, logl


def _allocated_theta(data: Dataset, state: ModelState) -> np.ndarray:
    """(n, m) atom locations of each observation's own component."""
    kern = kernels.active()
    idx = state.allocations - 1
    z = (state.atom_coeffs.beta0_z[idx]
         + np.einsum("imp,ip->im", state.atom_coeffs.beta_z[idx], data.x))
    return kern.theta_from_z(np.ascontiguousarray(z))


def _alloc_weight_loglik(data: Dataset, wc: WeightCoeffs,
                         allocations: np.ndarray) -> float:
    """sum_i log w_{s_i}(x_i): the membership part of the joint density."""
    if data.n == 0:
        return 0.0
    kern = kernels.active()
    logw = kern.log_stick_from_eta(_weight_predictors(data, wc))
    return float(logw[np.arange(data.n), allocations - 1].sum())


def _alloc_atom_loglik(data: Dataset, state: ModelState) -> float:
    """sum_i log dir(y_i | own component's kernel)."""
    if data.n == 0:
        return 0.0
    kern = kernels.active()
    theta = _allocated_theta(data, state)
    return float(kern.degree_loglik(data.logyfull, theta, state.k,
                                    _lg_table(state.m)))


# ---------------------------------------------------------------------------
# individual updates (each returns a new state)

def update_allocations(state: ModelState, data: Dataset,
                       rng: np.random.Generator) -> ModelState:
    """Resample every component membership from its categorical posterior."""
    new = state.copy()
    if data.n == 0:
        return new
    logw, logl = _likelihood_parts(data, new)
    u = rng.random(data.n)
    s, bad = kernels.active().sample_allocations(logw, logl, u)
    if bad >= 0:
        raise DegenerateAllocationError(bad)
    new.allocations = s
    return new


def update_coefficients_slice(state: ModelState, data: Dataset,
                              prior: PriorConfig, rng: np.random.Generator,
                              slice_width: float = 1.0,
                              slice_max_doublings: int = 10,
                              failures: dict | None = None) -> ModelState:
    """Slice-update every coefficient scalar against its full conditional."""
    new = state.copy()
    kern = kernels.active()
    wc, ac = new.weights_coeffs, new.atom_coeffs
    fw = kern.slice_weight_sweep(
        data.x, new.allocations, wc.beta0_eta, wc.beta_eta, prior.XtX,
        prior.tau_eta(new.gammas.gamma_eta), prior.sigma2_eta,
        slice_width, slice_max_doublings, rng)
    fa = kern.slice_atom_sweep(
        data.logyfull, data.x, new.allocations, ac.beta0_z, ac.beta_z,
        new.k, _lg_table(new.m), prior.XtX,
        prior.tau_z(new.gammas.gamma_z), prior.sigma2_z,
        slice_width, slice_max_doublings, rng)
    if failures is not None:
        failures["slice_failures_weights"] = (
            failures.get("slice_failures_weights", 0) + int(fw))
        failures["slice_failures_atoms"] = (
            failures.get("slice_failures_atoms", 0) + int(fa))
    return new


def update_degree_mh(state: ModelState, data: Dataset, prior: PriorConfig,
                     rng: np.random.Generator, halfwidth: int = 3,
                     diagnostics: dict | None = None) -> ModelState:
    """Windowed random-walk Metropolis step on the polynomial degree.

    The proposal is uniform on {k-halfwidth, ..., k+halfwidth} minus the
    current value, clipped to [1, K_CAP]; the asymmetric window sizes at
    the boundaries enter the acceptance ratio.
    """
    new = state.copy()
    k = new.k
    lo, hi = max(1, k - halfwidth), min(K_CAP, k + halfwidth)
    n_cand = hi - lo
    if n_cand <= 0:
        return new
    r = int(rng.integers(lo, hi))
    if r >= k:
        r += 1
    kp = r
    lg = _lg_table(new.m)
    if data.n:
        kern = kernels.active()
        theta = _allocated_theta(data, new)
        ll_cur = kern.degree_loglik(data.logyfull, theta, k, lg)
        ll_prop = kern.degree_loglik(data.logyfull, theta, kp, lg)
    else:
        ll_cur = ll_prop = 0.0
    lo2, hi2 = max(1, kp - halfwidth), min(K_CAP, kp + halfwidth)
    log_alpha = ((ll_prop + truncated_poisson_logpmf(kp, prior.lam))
                 - (ll_cur + truncated_poisson_logpmf(k, prior.lam))
                 + math.log(n_cand) - math.log(hi2 - lo2))
    u = rng.random()
    accept = (not math.isnan(log_alpha)) and math.log(u) < log_alpha
    if accept:
        new.k = kp
    if diagnostics is not None:
        diagnostics["k_proposals"] = diagnostics.get("k_proposals", 0) + 1
        diagnostics["k_accepts"] = diagnostics.get("k_accepts", 0) + int(accept)
    return new


def gamma_category_posterior(state: ModelState,
                             prior: PriorConfig) -> np.ndarray:
    """Normalized posterior over the four selection categories given the
    current slopes (the conjugate update's distribution)."""
    wc, ac = state.weights_coeffs, state.atom_coeffs
    S_eta = float(np.einsum("jp,pq,jq->", wc.beta_eta, prior.XtX, wc.beta_eta))
    S_z = float(np.einsum("jlp,pq,jlq->", ac.beta_z, prior.XtX, ac.beta_z))
    n_eta = state.N
    n_z = state.N * state.m
    p = prior.p
    logw = np.empty(4)
    for c, (ge, gz) in enumerate(CATEGORIES):
        te, tz = prior.tau_eta(ge), prior.tau_z(gz)
        logw[c] = (math.log(prior.selection_probs[c])
                   - 0.5 * n_eta * p * math.log(te) - S_eta / (2.0 * te)
                   - 0.5 * n_z * p * math.log(tz) - S_z / (2.0 * tz))
    logw -= logw.max()
    w = np.exp(logw)
    return w / w.sum()


def update_gammas(state: ModelState, prior: PriorConfig,
                  rng: np.random.Generator) -> ModelState:
    """Draw the selection bits from their conjugate 4-category posterior."""
    new = state.copy()
    probs = gamma_category_posterior(new, prior)
    u = rng.random()
    acc = 0.0
    cat = len(probs) - 1
    for c, pc in enumerate(probs):
        acc += pc
        if u <= acc:
            cat = c
            break
    ge, gz = CATEGORIES[cat]
    new.gammas = SelectionIndicators(ge, gz)
    return new


def _category_logprob(prior: PriorConfig, ge: int, gz: int) -> float:
    return math.log(prior.selection_probs[CATEGORIES.index((ge, gz))])


def update_gammas_rescale(state: ModelState, data: Dataset,
                          prior: PriorConfig, rng: np.random.Generator,
                          diagnostics: dict | None = None) -> ModelState:
    """Scale-coupled bit-flip moves (one per selection bit).

    Proposes gamma -> 1 - gamma together with slopes *= sqrt(tau'/tau) for
    every block governed by that bit.  The slope-prior ratio cancels the
    Jacobian exactly, so acceptance is the likelihood change of the parts
    the slopes touch (membership weights for the weights bit, allocated
    component kernels for the locations bit) plus the category-prior odds.
    """
    new = state.copy()

    # weights bit
    ge, gz = new.gammas.gamma_eta, new.gammas.gamma_z
    c = math.sqrt(prior.tau_eta(1 - ge) / prior.tau_eta(ge))
    ll_cur = _alloc_weight_loglik(data, new.weights_coeffs, new.allocations)
    wc_prop = WeightCoeffs(new.weights_coeffs.beta0_eta.copy(),
                           new.weights_coeffs.beta_eta * c)
    ll_prop = _alloc_weight_loglik(data, wc_prop, new.allocations)
    log_alpha = (ll_prop - ll_cur
                 + _category_logprob(prior, 1 - ge, gz)
                 - _category_logprob(prior, ge, gz))
    u = rng.random()
    acc_eta = (not math.isnan(log_alpha)) and math.log(u) < log_alpha
    if acc_eta:
        new.weights_coeffs = wc_prop
        new.gammas = SelectionIndicators(1 - ge, gz)

    # locations bit
    ge, gz = new.gammas.gamma_eta, new.gammas.gamma_z
    c = math.sqrt(prior.tau_z(1 - gz) / prior.tau_z(gz))
    ll_cur = _alloc_atom_loglik(data, new)
    cand = new.copy()
    cand.atom_coeffs = AtomCoeffs(new.atom_coeffs.beta0_z.copy(),
                                  new.atom_coeffs.beta_z * c)
    ll_prop = _alloc_atom_loglik(data, cand)
    log_alpha = (ll_prop - ll_cur
                 + _category_logprob(prior, ge, 1 - gz)
                 - _category_logprob(prior, ge, gz))
    u = rng.random()
    acc_z = (not math.isnan(log_alpha)) and math.log(u) < log_alpha
    if acc_z:
        new.atom_coeffs = cand.atom_coeffs
        new.gammas = SelectionIndicators(ge, 1 - gz)

    if diagnostics is not None:
        diagnostics["rescale_eta_accepts"] = (
            diagnostics.get("rescale_eta_accepts", 0) + int(acc_eta))
        diagnostics["rescale_z_accepts"] = (
            diagnostics.get("rescale_z_accepts", 0) + int(acc_z))
        diagnostics["rescale_proposals"] = (
            diagnostics.get("rescale_proposals", 0) + 1)
    return new


# ---------------------------------------------------------------------------
# chain driver

def _initial_state(data: Dataset, prior: PriorConfig,
                   rng: np.random.Generator) -> ModelState:
    """Full-model start: zero predictors, atoms at jittered data points,
    both selection bits in their slab state, everyone in component 1.

    Starting with the bits on lets the likelihood pull slope blocks to
    their natural scale before selection prunes them; the reverse start
    (spike) can trap a chain, because slopes the spike pins near zero make
    the conjugate bit update prefer the spike in turn.  The degree starts
    at 1 when the data touch the simplex boundary — degree 1 is the single
    uniform kernel, finite everywhere — and near the prior mode otherwise.
    """
    N, p, m = prior.N, prior.p, data.m
    has_boundary = bool(data.n) and bool(np.any(data.yfull == 0.0))
    k0 = 1 if has_boundary else min(K_CAP, max(1, round(prior.lam)))
    wc = WeightCoeffs(np.zeros(N), np.zeros((N, p)))
    if data.n:
        rows = rng.integers(0, data.n, size=N)
        full = (data.yfull[rows] + 0.01) / (1.0 + 0.01 * (m + 1))
        b0z = link_atom_inv(full[:, :m])
    else:
        b0z = np.zeros((N, m))
    ac = AtomCoeffs(b0z, np.zeros((N, m, p)))
    return ModelState(k0, wc, ac, SelectionIndicators(1, 1),
                      np.ones(data.n, dtype=np.int64))


def _allocations_with_retry(state: ModelState, data: Dataset,
                            prior: PriorConfig, rng: np.random.Generator,
                            halfwidth: int, diag: dict) -> ModelState:
    """Allocation step with the degree-retry escape hatch.

    Boundary observations admit finite likelihood only at degrees whose
    lattice gives their zero parts unit exponents; when every component
    fails for some row, force degree moves until allocations succeed,
    dropping to degree 1 (finite everywhere) as the last resort.
    """
    for _ in range(MAX_DEGENERATE_RETRIES):
        try:
            return update_allocations(state, data, rng)
        except DegenerateAllocationError:
            diag["degenerate_retries"] = diag.get("degenerate_retries", 0) + 1
            state = update_degree_mh(state, data, prior, rng, halfwidth, diag)
    diag["degenerate_fallbacks"] = diag.get("degenerate_fallbacks", 0) + 1
    state = state.copy()
    state.k = 1
    return update_allocations(state, data, rng)


def run_chain(data: Dataset, prior: PriorConfig, chain_config: ChainConfig,
              initial_state: ModelState | None = None) -> PosteriorSamples:
    """Run one chain; fully deterministic given (data, prior, config, seed).

    An empty dataset (zero rows, shaped (0, m) / (0, p)) is accepted and
    runs the sweep against the prior alone, which is how prior-recovery
    checks exercise the moves; XtX_inv must then be supplied up front.
    """
    if data.p != prior.p:
        raise ValueError(
            f"design has {data.p} columns but the prior was built for {prior.p}"
        )
    cfg = chain_config
    rng = np.random.default_rng(int(cfg.seed))
    state = initial_state.copy() if initial_state is not None \
        else _initial_state(data, prior, rng)
    if state.N != prior.N:
        raise ValueError("initial state and prior disagree on the truncation level")

    diag: dict = {
        "slice_failures_weights": 0,
        "slice_failures_atoms": 0,
        "k_proposals": 0,
        "k_accepts": 0,
        "rescale_proposals": 0,
        "rescale_eta_accepts": 0,
        "rescale_z_accepts": 0,
        "degenerate_retries": 0,
        "degenerate_fallbacks": 0,
    }
    states: list[ModelState] = []
    ll_rows: list[np.ndarray] = []
    g_rows: list[tuple[int, int]] = []
    k_rows: list[int] = []
    lp_rows: list[float] = []

    kern = kernels.active()
    for it in range(1, cfg.n_iter + 1):
        state = _allocations_with_retry(state, data, prior, rng,
                                        cfg.k_proposal_halfwidth, diag)
        state = update_coefficients_slice(
            state, data, prior, rng, cfg.slice_width,
            cfg.slice_max_doublings, failures=diag)
        state = update_degree_mh(state, data, prior, rng,
                                 cfg.k_proposal_halfwidth, diag)
        state = update_gammas(state, prior, rng)
        state = update_gammas_rescale(state, data, prior, rng, diag)

        if it > cfg.burn_in and (it - cfg.burn_in) % cfg.thin == 0:
            states.append(state.copy())
            logw, logl = _likelihood_parts(data, state)
            ll = kern.mixture_logliks(logw, logl)
            ll_rows.append(ll)
            g_rows.append(state.gammas.as_tuple())
            k_rows.append(state.k)
            lp_rows.append(float(ll.sum()) + log_prior(state, prior))

    diag["log_posterior_trace"] = lp_rows
    meta = {
        "model": "dmbpp",
        "n": data.n,
        "m": data.m,
        "p": data.p,
        "N": prior.N,
        "seed": int(cfg.seed),
        "n_iter": cfg.n_iter,
        "burn_in": cfg.burn_in,
        "thin": cfg.thin,
        "backend": kernels.backend_name(),
    }
    return PosteriorSamples(
        states=states,
        loglik_matrix=(np.array(ll_rows)
                       if ll_rows else np.zeros((0, data.n))),
        gamma_trace=np.array(g_rows, dtype=np.int64).reshape(len(g_rows), 2),
        k_trace=np.array(k_rows, dtype=np.int64),
        diagnostics=diag,
        meta=meta,
    )
