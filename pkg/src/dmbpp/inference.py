"""Posterior predictive densities and fit criteria.

The predictive surface is the plain average of each retained state's
conditional density over a product grid (covariate rows x a simplex
lattice).  Averaging exploits the lattice structure: states sharing a
degree contribute through the same finite family of Dirichlet kernels,
so their weights are accumulated per lattice index first and the kernel
table is evaluated once per degree.

Fit criteria work off the retained per-observation log-likelihood
matrix: LPML through the harmonic-mean identity for the conditional
predictive ordinate, and the widely-applicable information criterion in
its -n-scaled form (bigger is better for both).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logsumexp

from . import kernels
from .bernstein import CEIL_NUDGE, enumerate_H0
from .model import Dataset, ModelState, conditional_log_density, link_atom, \
    stick_weights, _full_rows
from .sampler import PosteriorSamples, _lg_table
from .simplex import SimplexGrid, simplex_grid, simplex_quadrature

__all__ = [
    "DensityGrid",
    "FitCriteria",
    "default_x_grid",
    "default_y_grid",
    "predictive_density",
    "predictive_density_reference",
    "density_grid_from_function",
    "integrated_l1",
    "l_infinity",
    "lpml",
    "waic",
    "fit_criteria",
]


@dataclass
class DensityGrid:
    """Conditional density values over covariate rows x simplex points."""

    x_grid: np.ndarray       # (L, p)
    y_grid: SimplexGrid
    values: np.ndarray       # (L, M), nonnegative

    def __post_init__(self) -> None:
        self.x_grid = np.atleast_2d(np.asarray(self.x_grid, dtype=float))
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))
        want = (len(self.x_grid), len(self.y_grid.points))
        if self.values.shape != want:
            raise ValueError(
                f"values shaped {self.values.shape}, expected {want}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("density values must be finite")
        if np.any(self.values < 0):
            raise ValueError("density values must be nonnegative")


@dataclass
class FitCriteria:
    """Model-comparison numbers; larger is better for both criteria."""

    lpml: float
    neg_n_waic: float
    cpo: np.ndarray


def default_x_grid(L: int = 20) -> np.ndarray:
    """Cell midpoints (l - 0.5)/L over (0, 1) for a univariate predictor."""
    return ((np.arange(1, L + 1) - 0.5) / L).reshape(-1, 1)


def default_y_grid(spacing: float = 0.02) -> SimplexGrid:
    """Interior lattice used for density comparison metrics."""
    return simplex_grid(spacing, kind="interior")


# ---------------------------------------------------------------------------
# predictive surface

def _h0_ranks(h0, jmat: np.ndarray) -> np.ndarray:
    """Vectorized rank lookup; assumes every row is a valid index."""
    keys = np.zeros(len(jmat), dtype=np.int64)
    base = h0.k + 1
    for col in range(h0.m):
        keys = keys * base + jmat[:, col]
    return np.searchsorted(h0.keys, keys)


def _pdr_predictive(states, x_grid: np.ndarray,
                    y_grid: SimplexGrid) -> np.ndarray:
    """Average Dirichlet-regression density: exp-linked parameters per
    covariate row, one closed-form kernel per retained state."""
    from scipy.special import gammaln

    pts = y_grid.points
    yfull = _full_rows(pts)
    D = yfull.shape[1]
    with np.errstate(divide="ignore"):
        logyfull = np.log(yfull)
    values = np.zeros((len(x_grid), len(pts)))
    with np.errstate(invalid="ignore"):
        for st in states:
            lin = st.beta[:, 0][None, :] + x_grid @ st.beta[:, 1:].T
            if st.beta.shape[0] == D - 1:
                lin = np.column_stack([lin, np.zeros(len(x_grid))])
            g = np.exp(lin)                                    # (L, D)
            logdens = np.repeat(
                (gammaln(g.sum(axis=1)) - gammaln(g).sum(axis=1)
                 )[:, None], len(pts), axis=1)
            for d in range(D):
                ex = (g[:, d] - 1.0)[:, None]
                term = ex * logyfull[:, d][None, :]
                logdens += np.where(ex == 0.0, 0.0, term)
            values += np.exp(logdens)
    return values / len(states)


def predictive_density(samples: PosteriorSamples, x_grid: np.ndarray,
                       y_grid: SimplexGrid) -> DensityGrid:
    """Posterior-mean conditional density over the product grid."""
    states: list[ModelState] = samples.states
    if not states:
        raise ValueError("no retained states to average")
    x_grid = np.atleast_2d(np.asarray(x_grid, dtype=float))
    if not isinstance(states[0], ModelState):
        values = _pdr_predictive(states, x_grid, y_grid)
        return DensityGrid(x_grid=x_grid, y_grid=y_grid, values=values)
    m = states[0].m
    pts = y_grid.points
    yfull = _full_rows(pts)
    with np.errstate(divide="ignore"):
        logyfull = np.log(yfull)
    lg = _lg_table(m)
    kern = kernels.active()
    L, M = len(x_grid), len(pts)

    by_degree: dict[int, list[ModelState]] = {}
    for st in states:
        by_degree.setdefault(st.k, []).append(st)

    values = np.zeros((L, M))
    for k in sorted(by_degree):
        h0 = enumerate_H0(k, m)
        acc = np.zeros((L, len(h0)))
        for st in by_degree[k]:
            wc, ac_ = st.weights_coeffs, st.atom_coeffs
            eta = wc.beta0_eta[None, :] + x_grid @ wc.beta_eta.T     # (L, N)
            v = expit(eta)
            z = ac_.beta0_z[None] + np.einsum("ip,jlp->ijl", x_grid, ac_.beta_z)
            theta = link_atom(z)                                     # (L, N, m)
            jmat = np.clip(
                np.ceil(k * theta - CEIL_NUDGE).astype(np.int64), 1, k)
            for xi in range(L):
                w = stick_weights(v[xi])
                np.add.at(acc[xi], _h0_ranks(h0, jmat[xi]), w)
        table = kern.dirichlet_table(h0.alphas(), logyfull, lg)     # (B, M)
        values += acc @ table
    values /= len(states)
    return DensityGrid(x_grid=x_grid, y_grid=y_grid,
                       values=np.maximum(values, 0.0))


def predictive_density_reference(samples: PosteriorSamples,
                                 x_grid: np.ndarray,
                                 y_grid: SimplexGrid) -> DensityGrid:
    """Same surface by direct state-by-state evaluation (slow, for checks)."""
    from .simplex import dirichlet_log_density

    states = samples.states
    if not states:
        raise ValueError("no retained states to average")
    x_grid = np.atleast_2d(np.asarray(x_grid, dtype=float))
    values = np.zeros((len(x_grid), len(y_grid.points)))
    D = y_grid.points.shape[1] + 1
    for st in states:
        for xi, x in enumerate(x_grid):
            if isinstance(st, ModelState):
                values[xi] += np.exp(
                    conditional_log_density(y_grid.points, x, st))
            else:
                g = np.exp(st.beta[:, 0] + st.beta[:, 1:] @ x)
                if st.beta.shape[0] == D - 1:
                    g = np.append(g, 1.0)
                values[xi] += np.array([
                    np.exp(dirichlet_log_density(pt, g))
                    for pt in y_grid.points])
    values /= len(states)
    return DensityGrid(x_grid=x_grid, y_grid=y_grid, values=values)


def density_grid_from_function(fn, x_grid: np.ndarray,
                               y_grid: SimplexGrid) -> DensityGrid:
    """Tabulate a callable density fn(y_points, x_row) -> (M,) values."""
    x_grid = np.atleast_2d(np.asarray(x_grid, dtype=float))
    values = np.stack([np.asarray(fn(y_grid.points, x), dtype=float)
                       for x in x_grid])
    return DensityGrid(x_grid=x_grid, y_grid=y_grid, values=values)


# ---------------------------------------------------------------------------
# density-distance metrics

def _check_same_grids(est: DensityGrid, truth: DensityGrid) -> None:
    if est.values.shape != truth.values.shape:
        raise ValueError(
            f"grid mismatch: value shapes {est.values.shape} vs "
            f"{truth.values.shape}")
    if not np.array_equal(est.x_grid, truth.x_grid):
        raise ValueError("grid mismatch: covariate grids differ")
    if not np.array_equal(est.y_grid.points, truth.y_grid.points):
        raise ValueError("grid mismatch: simplex lattices differ")


def integrated_l1(est: DensityGrid, truth: DensityGrid) -> float:
    """Double average of |est - truth| over the product grid.

    A plain average over the L x M cells — not a volume-weighted
    quadrature — so it is comparable across lattice spacings only insofar
    as the grids match, which is enforced.
    """
    _check_same_grids(est, truth)
    return float(np.abs(est.values - truth.values).mean())


def l_infinity(est: DensityGrid, truth: DensityGrid) -> float:
    """Largest absolute difference over the product grid."""
    _check_same_grids(est, truth)
    return float(np.abs(est.values - truth.values).max())


# ---------------------------------------------------------------------------
# fit criteria

def _finite_rows(loglik: np.ndarray) -> np.ndarray:
    """Retained-draw rows safe for the criteria; warns on exclusions."""
    loglik = np.asarray(loglik, dtype=float)
    if loglik.ndim != 2 or loglik.shape[0] == 0:
        raise ValueError("need a nonempty (draws x observations) matrix")
    keep = np.all(np.isfinite(loglik), axis=1)
    if not np.any(keep):
        col_dead = np.all(np.isneginf(loglik), axis=0)
        if np.any(col_dead):
            i = int(np.nonzero(col_dead)[0][0])
            raise ValueError(
                f"observation {i} has -inf log-likelihood in every retained "
                f"draw; criteria are undefined")
        raise ValueError("every retained draw contains a -inf log-likelihood")
    dropped = int((~keep).sum())
    if dropped:
        warnings.warn(
            f"excluded {dropped} retained draw(s) containing -inf "
            f"log-likelihoods from the fit criteria",
            RuntimeWarning, stacklevel=3)
    return loglik[keep]


def lpml(samples: PosteriorSamples) -> tuple[float, np.ndarray]:
    """Log pseudo marginal likelihood and per-observation CPOs.

    CPO_i is the harmonic mean of the retained likelihood draws for
    observation i, computed in log space: log CPO_i = log T -
    logsumexp(-loglik[:, i]).
    """
    ll = _finite_rows(samples.loglik_matrix)
    T = ll.shape[0]
    logcpo = np.log(T) - logsumexp(-ll, axis=0)
    return float(logcpo.sum()), np.exp(logcpo)


def waic(samples: PosteriorSamples) -> float:
    """The -n-scaled widely-applicable information criterion.

    Returns sum_i log(mean_t p_ti) - sum_i var_t(log p_ti), the sample
    variance over draws (one retained draw gives a zero penalty).
    """
    ll = _finite_rows(samples.loglik_matrix)
    T = ll.shape[0]
    lppd = logsumexp(ll, axis=0) - np.log(T)
    penalty = ll.var(axis=0, ddof=1) if T > 1 else np.zeros(ll.shape[1])
    return float(lppd.sum() - penalty.sum())


def fit_criteria(samples: PosteriorSamples) -> FitCriteria:
    lp, cpo = lpml(samples)
    return FitCriteria(lpml=lp, neg_n_waic=waic(samples), cpo=cpo)
