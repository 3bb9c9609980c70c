"""Covariate-dependent Bernstein-polynomial mixture model on the simplex.

A mixture of Dirichlet densities whose component weights and component
locations both move with a predictor vector x:

* weights come from a truncated stick-breaking construction whose sticks
  are logistic transforms of linear predictors (one coefficient block per
  component, the last stick forced to one);
* each component's location is a point on the simplex obtained by pushing
  a linear predictor through the multivariate logistic link, then snapped
  to the Bernstein lattice of the current polynomial degree ``k`` via the
  ceiling map, which fixes the component's integer Dirichlet parameters.

Slope coefficients carry a two-component ("spike and slab") multivariate
normal prior with covariance proportional to the inverse Gram matrix of
the design; two bits select, jointly, whether the weights and/or the
locations actually depend on the predictors.  The bits only switch the
prior covariance — evaluation always uses the stored slopes, which the
spike shrinks toward zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, gammaln

from .bernstein import K_CAP, ceil_index, enumerate_H0
from .simplex import SUM_TOL, validate_point

__all__ = [
    "Dataset",
    "WeightCoeffs",
    "AtomCoeffs",
    "SelectionIndicators",
    "ModelState",
    "PriorConfig",
    "link_weight",
    "link_atom",
    "link_atom_inv",
    "stick_weights",
    "conditional_log_density",
    "aggregated_weights",
    "log_prior",
    "truncated_poisson_logpmf",
]

CATEGORIES: tuple[tuple[int, int], ...] = ((1, 1), (0, 1), (1, 0), (0, 0))


def _full_rows(y: np.ndarray) -> np.ndarray:
    """(M, m) free coordinates -> (M, m+1) full compositions (clipped)."""
    y = np.atleast_2d(np.asarray(y, dtype=float))
    last = 1.0 - y.sum(axis=1)
    bad = last < -SUM_TOL
    if np.any(bad):
        raise ValueError(
            f"composition parts exceed 1 at row {int(np.nonzero(bad)[0][0])}"
        )
    return np.column_stack([y, np.maximum(last, 0.0)])


@dataclass
class Dataset:
    """Observed compositions (free coordinates) with their design rows.

    ``y`` is (n, m): the first m parts of each composition, the implicit
    last part being one minus their sum.  ``x`` is (n, p) and carries no
    intercept column.
    """

    y: np.ndarray
    x: np.ndarray

    def __post_init__(self) -> None:
        self.y = np.atleast_2d(np.asarray(self.y, dtype=float))
        self.x = np.atleast_2d(np.asarray(self.x, dtype=float))
        if self.y.shape[0] != self.x.shape[0]:
            raise ValueError(
                f"{self.y.shape[0]} compositions vs {self.x.shape[0]} design rows"
            )
        if not np.all(np.isfinite(self.x)):
            raise ValueError("design matrix has non-finite entries")
        for i, row in enumerate(self.y):
            try:
                validate_point(row)
            except ValueError as exc:
                raise ValueError(f"invalid composition at row {i}: {exc}") from exc
        self.yfull = _full_rows(self.y)
        with np.errstate(divide="ignore"):
            self.logyfull = np.log(self.yfull)

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def m(self) -> int:
        return self.y.shape[1]

    @property
    def p(self) -> int:
        return self.x.shape[1]


@dataclass
class WeightCoeffs:
    """Per-component linear predictors of the stick-breaking weights."""

    beta0_eta: np.ndarray  # (N,)
    beta_eta: np.ndarray   # (N, p)

    def __post_init__(self) -> None:
        self.beta0_eta = np.asarray(self.beta0_eta, dtype=float)
        self.beta_eta = np.atleast_2d(np.asarray(self.beta_eta, dtype=float))
        if self.beta0_eta.ndim != 1 or len(self.beta0_eta) != len(self.beta_eta):
            raise ValueError("weight coefficient shapes disagree")

    def copy(self) -> "WeightCoeffs":
        return WeightCoeffs(self.beta0_eta.copy(), self.beta_eta.copy())


@dataclass
class AtomCoeffs:
    """Per-component, per-coordinate linear predictors of the locations."""

    beta0_z: np.ndarray  # (N, m)
    beta_z: np.ndarray   # (N, m, p)

    def __post_init__(self) -> None:
        self.beta0_z = np.atleast_2d(np.asarray(self.beta0_z, dtype=float))
        self.beta_z = np.asarray(self.beta_z, dtype=float)
        if self.beta_z.ndim != 3 or self.beta_z.shape[:2] != self.beta0_z.shape:
            raise ValueError("atom coefficient shapes disagree")

    def copy(self) -> "AtomCoeffs":
        return AtomCoeffs(self.beta0_z.copy(), self.beta_z.copy())


@dataclass
class SelectionIndicators:
    """Bits choosing which halves of the model see the predictors."""

    gamma_eta: int
    gamma_z: int

    def __post_init__(self) -> None:
        if self.gamma_eta not in (0, 1) or self.gamma_z not in (0, 1):
            raise ValueError("selection indicators must be 0 or 1")

    def as_tuple(self) -> tuple[int, int]:
        return (int(self.gamma_eta), int(self.gamma_z))


@dataclass
class ModelState:
    """One full set of latent variables: degree, coefficients, bits,
    and per-observation component memberships (1-based)."""

    k: int
    weights_coeffs: WeightCoeffs
    atom_coeffs: AtomCoeffs
    gammas: SelectionIndicators
    allocations: np.ndarray

    def __post_init__(self) -> None:
        self.k = int(self.k)
        if not 1 <= self.k <= K_CAP:
            raise ValueError(f"degree {self.k} outside [1, {K_CAP}]")
        self.allocations = np.asarray(self.allocations, dtype=np.int64)
        N = self.N
        if self.allocations.size and (
            self.allocations.min() < 1 or self.allocations.max() > N
        ):
            raise ValueError("allocations outside 1..N")
        if self.atom_coeffs.beta0_z.shape[0] != N:
            raise ValueError("weight and atom truncation levels disagree")

    @property
    def N(self) -> int:
        return len(self.weights_coeffs.beta0_eta)

    @property
    def m(self) -> int:
        return self.atom_coeffs.beta0_z.shape[1]

    @property
    def p(self) -> int:
        return self.weights_coeffs.beta_eta.shape[1]

    def copy(self) -> "ModelState":
        return ModelState(
            self.k,
            self.weights_coeffs.copy(),
            self.atom_coeffs.copy(),
            SelectionIndicators(self.gammas.gamma_eta, self.gammas.gamma_z),
            self.allocations.copy(),
        )


@dataclass
class PriorConfig:
    """Every hyperparameter of the joint prior.

    Slope blocks get a mean-zero multivariate normal with covariance
    ``tau * XtX_inv`` — ``tau1_*`` (spike, small) or ``tau2_*`` (slab,
    large) according to the selection bits.  ``t`` sets the prior over the
    four (weights-bit, locations-bit) categories ``(1,1),(0,1),(1,0),(0,0)``
    as ``(1/t^2, (t-1)/(2t^2), (t-1)/(2t^2), (t-1)/t)``.  ``lam`` is the
    rate of the zero-truncated Poisson prior on the degree.
    """

    XtX_inv: np.ndarray
    lam: float = 25.0
    sigma2_eta: float = 100.0
    sigma2_z: float = 100.0
    tau1_eta: float = 0.01
    tau2_eta: float = 100.0
    tau1_z: float = 0.01
    tau2_z: float = 100.0
    t: float = 2.0
    N: int = 20
    XtX: np.ndarray | None = None
    logdet_XtX_inv: float = field(init=False)

    def __post_init__(self) -> None:
        self.XtX_inv = np.atleast_2d(np.asarray(self.XtX_inv, dtype=float))
        if self.XtX_inv.shape[0] != self.XtX_inv.shape[1]:
            raise ValueError("XtX_inv must be square")
        if self.lam <= 0 or self.sigma2_eta <= 0 or self.sigma2_z <= 0:
            raise ValueError("rate and variance hyperparameters must be positive")
        if not (0 < self.tau1_eta <= self.tau2_eta):
            raise ValueError("need 0 < tau1_eta <= tau2_eta")
        if not (0 < self.tau1_z <= self.tau2_z):
            raise ValueError("need 0 < tau1_z <= tau2_z")
        if self.t <= 1:
            raise ValueError("selection-prior parameter t must exceed 1")
        if self.N < 1:
            raise ValueError("truncation level must be at least 1")
        sign, logdet = np.linalg.slogdet(self.XtX_inv)
        if sign <= 0:
            raise ValueError("XtX_inv is not positive definite")
        self.logdet_XtX_inv = float(logdet)
        if self.XtX is None:
            self.XtX = np.linalg.inv(self.XtX_inv)
        else:
            self.XtX = np.atleast_2d(np.asarray(self.XtX, dtype=float))

    @property
    def p(self) -> int:
        return self.XtX_inv.shape[0]

    @property
    def selection_probs(self) -> np.ndarray:
        """Prior over CATEGORIES, in that order."""
        t = self.t
        half = (t - 1.0) / (2.0 * t * t)
        return np.array([1.0 / (t * t), half, half, (t - 1.0) / t])

    def tau_eta(self, gamma_eta: int) -> float:
        return self.tau2_eta if gamma_eta else self.tau1_eta

    def tau_z(self, gamma_z: int) -> float:
        return self.tau2_z if gamma_z else self.tau1_z

    @classmethod
    def from_design(cls, x: np.ndarray, **kwargs) -> "PriorConfig":
        """Build from the raw design matrix (no intercept column)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        xtx = x.T @ x
        try:
            np.linalg.cholesky(xtx)
        except np.linalg.LinAlgError as exc:
            raise ValueError(
                "design matrix is rank deficient: X'X is not positive definite"
            ) from exc
        return cls(XtX_inv=np.linalg.inv(xtx), XtX=xtx, **kwargs)


# ---------------------------------------------------------------------------
# links and weights

def link_weight(a):
    """Logistic link e^a / (1 + e^a) for the stick variables."""
    out = expit(a)
    return float(out) if np.isscalar(a) or np.ndim(a) == 0 else out


def link_atom(b: np.ndarray) -> np.ndarray:
    """Multivariate logistic link (e^{b_1},...,e^{b_m}) / (1 + sum e^{b_l}).

    Accepts (..., m); returns strictly interior simplex points of the same
    shape (free coordinates).
    """
    b = np.asarray(b, dtype=float)
    c = np.maximum(b.max(axis=-1, keepdims=True), 0.0)
    num = np.exp(b - c)
    return num / (np.exp(-c) + num.sum(axis=-1, keepdims=True))


def link_atom_inv(theta: np.ndarray) -> np.ndarray:
    """Inverse of :func:`link_atom` on the open simplex."""
    theta = np.asarray(theta, dtype=float)
    last = 1.0 - theta.sum(axis=-1, keepdims=True)
    if np.any(theta <= 0) or np.any(last <= 0):
        raise ValueError("link_atom_inv needs a strictly interior point")
    return np.log(theta) - np.log(last)


def stick_weights(v: np.ndarray) -> np.ndarray:
    """Mixture weights w_j = v_j * prod_{l<j} (1 - v_l), truncated.

    The last entry of ``v`` is treated as one (truncation), and the last
    weight is computed as one minus the left-to-right sum of the others,
    so that a left-to-right sum of the result returns exactly 1.0.
    """
    v = np.asarray(v, dtype=float)
    N = len(v)
    w = np.empty(N)
    prod = 1.0
    acc = 0.0
    for j in range(N - 1):
        w[j] = v[j] * prod
        prod *= 1.0 - v[j]
        acc += w[j]
    w[N - 1] = max(0.0, 1.0 - acc)
    return w


# ---------------------------------------------------------------------------
# density evaluation

def _dirichlet_rows(yfull: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    """log dir(y | alpha) for (M, m+1) full compositions, integer alpha >= 1."""
    alpha = np.asarray(alpha, dtype=float)
    const = gammaln(alpha.sum()) - gammaln(alpha).sum()
    ex = alpha - 1.0
    with np.errstate(divide="ignore", invalid="ignore"):
        logs = np.log(yfull)
        terms = np.where(ex > 0, ex * logs, 0.0)
    terms = np.where((yfull == 0.0) & (ex > 0), -np.inf, terms)
    return const + terms.sum(axis=1)


def _component_params(x: np.ndarray, state: ModelState):
    """Weights and per-component Dirichlet parameters at one design row."""
    x = np.asarray(x, dtype=float).reshape(-1)
    wc, ac = state.weights_coeffs, state.atom_coeffs
    eta = wc.beta0_eta + wc.beta_eta @ x
    v = expit(eta)
    v[-1] = 1.0
    w = stick_weights(v)
    z = ac.beta0_z + ac.beta_z @ x
    theta = link_atom(z)
    k, m = state.k, theta.shape[1]
    jmat = np.stack([ceil_index(k, theta[j]) for j in range(state.N)])
    alphas = np.column_stack([jmat, k + m - jmat.sum(axis=1)])
    return w, jmat, alphas


def conditional_log_density(y: np.ndarray, x: np.ndarray,
                            state: ModelState):
    """log f_x(y): the mixture over components at design row x.

    ``y`` may be one point (m,) or a stack (M, m); returns a float or an
    (M,) array accordingly.  Boundary points may evaluate to -inf.
    """
    y = np.asarray(y, dtype=float)
    single = y.ndim == 1
    yfull = _full_rows(y)
    w, _, alphas = _component_params(x, state)
    logd = np.stack([_dirichlet_rows(yfull, alphas[j])
                     for j in range(state.N)], axis=1)     # (M, N)
    with np.errstate(divide="ignore"):
        logw = np.log(w)
    tot = logd + logw[None, :]
    mx = tot.max(axis=1)
    out = np.full(len(yfull), -np.inf)
    ok = np.isfinite(mx)
    if np.any(ok):
        out[ok] = mx[ok] + np.log(
            np.exp(tot[ok] - mx[ok][:, None]).sum(axis=1))
    return float(out[0]) if single else out


def aggregated_weights(x: np.ndarray, state: ModelState) -> dict:
    """Mixture mass collapsed onto the lattice index set.

    Components whose locations fall in the same lattice cell share a
    Dirichlet kernel, so their stick weights add; the result maps each
    occupied index (as a tuple) to its total weight, and the mixture over
    these indices equals :func:`conditional_log_density` pointwise.
    """
    w, jmat, _ = _component_params(x, state)
    out: dict[tuple[int, ...], float] = {}
    for j in range(state.N):
        key = tuple(int(v) for v in jmat[j])
        out[key] = out.get(key, 0.0) + float(w[j])
    return out


# ---------------------------------------------------------------------------
# joint prior

def truncated_poisson_logpmf(k: int, lam: float) -> float:
    """Zero-truncated Poisson log-pmf on k >= 1."""
    if k < 1:
        return -np.inf
    return float(k * np.log(lam) - lam - gammaln(k + 1.0)
                 - np.log1p(-np.exp(-lam)))


def _slope_block_logpdf(b: np.ndarray, prior: PriorConfig, tau: float) -> float:
    """Mean-zero MVN with covariance tau * XtX_inv at one slope block."""
    p = prior.p
    quad = float(b @ prior.XtX @ b)
    return (-0.5 * p * np.log(2.0 * np.pi)
            - 0.5 * (p * np.log(tau) + prior.logdet_XtX_inv)
            - quad / (2.0 * tau))


def log_prior(state: ModelState, prior: PriorConfig) -> float:
    """Joint log prior of (k, coefficients, selection bits).

    Allocations carry no prior factor here (they are likelihood-side
    latents), and the sticks are deterministic in the coefficients.
    """
    wc, ac = state.weights_coeffs, state.atom_coeffs
    lp = truncated_poisson_logpmf(state.k, prior.lam)
    cat = CATEGORIES.index(state.gammas.as_tuple())
    lp += float(np.log(prior.selection_probs[cat]))

    s2e = prior.sigma2_eta
    lp += float(-0.5 * len(wc.beta0_eta) * np.log(2.0 * np.pi * s2e)
                - (wc.beta0_eta ** 2).sum() / (2.0 * s2e))
    s2z = prior.sigma2_z
    lp += float(-0.5 * ac.beta0_z.size * np.log(2.0 * np.pi * s2z)
                - (ac.beta0_z ** 2).sum() / (2.0 * s2z))

    te = prior.tau_eta(state.gammas.gamma_eta)
    for j in range(state.N):
        lp += _slope_block_logpdf(wc.beta_eta[j], prior, te)
    tz = prior.tau_z(state.gammas.gamma_z)
    for j in range(state.N):
        for l in range(state.m):
            lp += _slope_block_logpdf(ac.beta_z[j, l], prior, tz)
    return lp
