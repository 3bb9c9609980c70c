import numpy as np
import pytest

from dmbpp.model import (AtomCoeffs, Dataset, ModelState, PriorConfig,
                         SelectionIndicators, WeightCoeffs)
from dmbpp.sampler import ChainConfig, run_chain


def random_state(rng, n=0, N=None, k=None, m=2, p=1, coeff_scale=1.0):
    """A structurally valid ModelState with modestly sized coefficients."""
    N = int(rng.integers(1, 11)) if N is None else N
    k = int(rng.integers(1, 9)) if k is None else k
    wc = WeightCoeffs(beta0_eta=rng.normal(0, coeff_scale, N),
                      beta_eta=rng.normal(0, coeff_scale, (N, p)))
    ac = AtomCoeffs(beta0_z=rng.normal(0, coeff_scale, (N, m)),
                    beta_z=rng.normal(0, coeff_scale, (N, m, p)))
    gam = SelectionIndicators(gamma_eta=int(rng.integers(0, 2)),
                              gamma_z=int(rng.integers(0, 2)))
    alloc = rng.integers(1, N + 1, size=n).astype(np.int64)
    return ModelState(k=k, weights_coeffs=wc, atom_coeffs=ac, gammas=gam,
                      allocations=alloc)


def dirichlet_rows(rng, alpha, n):
    g = rng.standard_gamma(np.broadcast_to(alpha, (n, len(alpha))))
    return g / g.sum(axis=1, keepdims=True)


@pytest.fixture(scope="session")
def small_data():
    """60 observations from a fixed smooth Dirichlet regression."""
    rng = np.random.default_rng(1234)
    x = rng.random((60, 1))
    a = np.stack([5 + 9 * x[:, 0], 30 + 9 * x[:, 0], 3 + 9 * x[:, 0]], axis=1)
    g = rng.standard_gamma(a)
    yfull = g / g.sum(axis=1, keepdims=True)
    return Dataset(y=yfull[:, :2], x=x)


@pytest.fixture(scope="session")
def small_prior(small_data):
    return PriorConfig.from_design(small_data.x, N=8)


@pytest.fixture(scope="session")
def short_chain(small_data, small_prior):
    """One quick chain reused by tests that only need *some* real posterior."""
    cfg = ChainConfig(n_iter=120, burn_in=40, thin=4, seed=777)
    return run_chain(small_data, small_prior, cfg)
