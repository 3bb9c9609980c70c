"""Pure-NumPy kernel backend.

Vectorized reference implementations of the hot loops.  Everything here
is deliberately free of package-internal imports (arrays in, arrays out)
so the numba twin can mirror it one-to-one and the benchmark can load
both side by side.

Shared conventions (both backends):

* ``logyfull`` — per-row logs of all ``m+1`` composition parts, with
  ``-inf`` marking exact zeros.
* ``lg`` — table with ``lg[a] = gammaln(a)`` for integer ``a``; Dirichlet
  parameters produced by the ceiling map are integers, so log-gamma is a
  table lookup.
* allocations ``s`` are 1-based component indices.
* slice sampling follows the stepping-out scheme with a total expansion
  budget of ``max_steps`` intervals split randomly between the two sides,
  then shrinkage; a shrinkage loop that fails to move after 100 tries
  keeps the current value and counts one failure.
"""

from __future__ import annotations

import math

import numpy as np

NUDGE = 1e-12  # ceiling nudge; keep in sync with bernstein.CEIL_NUDGE


# ---------------------------------------------------------------------------
# stick weights / links

def log_stick_from_eta(eta: np.ndarray) -> np.ndarray:
    """Row-wise log stick-breaking weights from weight-process predictors.

    ``eta`` is (n, N); column N-1 is ignored (the last stick is forced to
    one by truncation).  Returns log w with exact log-space telescoping:
    ``log w_j = log V_j + sum_{l<j} log(1 - V_l)``.
    """
    eta = np.asarray(eta, dtype=float)
    logv = -np.logaddexp(0.0, -eta)        # log sigmoid(eta)
    log1mv = -np.logaddexp(0.0, eta)       # log sigmoid(-eta)
    logv[:, -1] = 0.0                      # V_N = 1
    out = logv.copy()
    if eta.shape[1] > 1:
        cum = np.cumsum(log1mv[:, :-1], axis=1)
        out[:, 1:] += cum
    return out


def theta_from_z(z: np.ndarray) -> np.ndarray:
    """Multivariate logistic link: exp(z) / (1 + sum exp(z)), stable."""
    z = np.asarray(z, dtype=float)
    c = np.maximum(z.max(axis=-1, keepdims=True), 0.0)
    num = np.exp(z - c)
    denom = np.exp(-c) + num.sum(axis=-1, keepdims=True)
    return num / denom


# ---------------------------------------------------------------------------
# Dirichlet component log-likelihoods

def _ceil_idx(k: int, theta: np.ndarray) -> np.ndarray:
    j = np.ceil(k * theta - NUDGE).astype(np.int64)
    return np.clip(j, 1, k)


def _dirich_rows(logyfull: np.ndarray, jmat: np.ndarray, k: int,
                 lg: np.ndarray) -> np.ndarray:
    """log dir(y_i | alpha(k, j_i)) for paired rows of logs and indices."""
    m = jmat.shape[-1]
    km = k + m
    last = km - jmat.sum(axis=-1)
    alpha = np.concatenate([jmat, last[..., None]], axis=-1)
    out = lg[km] - lg[alpha].sum(axis=-1)
    logs = logyfull if logyfull.ndim == alpha.ndim else logyfull[:, None, :]
    ex = alpha - 1.0
    with np.errstate(invalid="ignore"):
        terms = np.where(ex > 0, ex * logs, 0.0)  # 0*log(0) := 0 via the mask
    # a zero part with exponent > 0 must force -inf, not nan
    nan_fix = np.isneginf(logs) & (ex > 0)
    terms = np.where(nan_fix, -np.inf, terms)
    return out + terms.sum(axis=-1)


def component_logliks(logyfull: np.ndarray, theta: np.ndarray, k: int,
                      lg: np.ndarray) -> np.ndarray:
    """(n, N) matrix of log dir(y_i | alpha(k, ceil(k * theta_ij)))."""
    j = _ceil_idx(k, theta)
    return _dirich_rows(logyfull, j, k, lg)


def degree_loglik(logyfull: np.ndarray, theta: np.ndarray, k: int,
                  lg: np.ndarray) -> float:
    """Total allocated-component log-likelihood at degree k."""
    if logyfull.shape[0] == 0:
        return 0.0
    j = _ceil_idx(k, theta)
    return float(_dirich_rows(logyfull, j, k, lg).sum())


# ---------------------------------------------------------------------------
# allocations / mixture rows

def sample_allocations(logw: np.ndarray, logl: np.ndarray,
                       u: np.ndarray) -> tuple[np.ndarray, int]:
    """Categorical draws per row from log weights + log likelihoods.

    Returns (1-based indices, first degenerate row or -1).  A row is
    degenerate when every component is -inf.
    """
    tot = logw + logl
    mx = tot.max(axis=1)
    bad = np.nonzero(~np.isfinite(mx))[0]
    if bad.size:
        return np.zeros(len(tot), dtype=np.int64), int(bad[0])
    p = np.exp(tot - mx[:, None])
    cum = np.cumsum(p, axis=1)
    targets = u * cum[:, -1]
    s = (targets[:, None] > cum).sum(axis=1) + 1
    return s.astype(np.int64), -1


def mixture_logliks(logw: np.ndarray, logl: np.ndarray) -> np.ndarray:
    """Row-wise log sum_j w_j * l_j (log-sum-exp; -inf rows stay -inf)."""
    tot = logw + logl
    mx = tot.max(axis=1)
    out = np.full(len(tot), -np.inf)
    ok = np.isfinite(mx)
    if np.any(ok):
        out[ok] = mx[ok] + np.log(
            np.exp(tot[ok] - mx[ok][:, None]).sum(axis=1)
        )
    return out


# ---------------------------------------------------------------------------
# slice-sampled coefficient sweeps

def _slice_scalar(cur: float, target, width: float, max_steps: int,
                  rng: np.random.Generator) -> tuple[float, int]:
    """One univariate slice update (stepping-out + shrinkage)."""
    lp0 = target(cur)
    log_h = lp0 + math.log(rng.random())
    L = cur - width * rng.random()
    R = L + width
    jbud = int(math.floor(max_steps * rng.random()))
    kbud = max_steps - 1 - jbud
    while jbud > 0 and target(L) > log_h:
        L -= width
        jbud -= 1
    while kbud > 0 and target(R) > log_h:
        R += width
        kbud -= 1
    for _ in range(100):
        prop = L + rng.random() * (R - L)
        if target(prop) > log_h:
            return prop, 0
        if prop < cur:
            L = prop
        else:
            R = prop
        if (R - L) <= 1e-14 * (1.0 + abs(cur)):
            break
    return cur, 1


def slice_weight_sweep(x: np.ndarray, s: np.ndarray, beta0: np.ndarray,
                       beta: np.ndarray, XtX: np.ndarray, tau: float,
                       sigma2: float, width: float, max_steps: int,
                       rng: np.random.Generator) -> int:
    """Slice-update every weight-process coefficient in place.

    Block j's likelihood collects ``log V_j`` over rows allocated to j and
    ``log(1 - V_j)`` over rows allocated beyond j; the final block has no
    likelihood term (its stick is forced to one).
    """
    N, p = beta.shape
    fails = 0
    for jj in range(N):
        c = jj + 1
        eq = x[s == c] if s.size else x[:0]
        gt = x[s > c] if s.size else x[:0]
        is_last = jj == N - 1

        def loglik(b0: float, bvec: np.ndarray) -> float:
            if is_last:
                return 0.0
            t = 0.0
            if len(eq):
                e = b0 + eq @ bvec
                t += -np.logaddexp(0.0, -e).sum()
            if len(gt):
                e = b0 + gt @ bvec
                t += -np.logaddexp(0.0, e).sum()
            return float(t)

        bvec = beta[jj]

        def t_intercept(v: float) -> float:
            return loglik(v, bvec) - v * v / (2.0 * sigma2)

        beta0[jj], f = _slice_scalar(float(beta0[jj]), t_intercept,
                                     width, max_steps, rng)
        fails += f
        for q in range(p):
            def t_slope(v: float, q: int = q) -> float:
                old = bvec[q]
                bvec[q] = v
                quad = float(bvec @ XtX @ bvec)
                val = loglik(float(beta0[jj]), bvec) - quad / (2.0 * tau)
                bvec[q] = old
                return val

            bvec[q], f = _slice_scalar(float(bvec[q]), t_slope,
                                       width, max_steps, rng)
            fails += f
    return fails


def slice_atom_sweep(logyfull: np.ndarray, x: np.ndarray, s: np.ndarray,
                     beta0z: np.ndarray, betaz: np.ndarray, k: int,
                     lg: np.ndarray, XtX: np.ndarray, tau: float,
                     sigma2: float, width: float, max_steps: int,
                     rng: np.random.Generator) -> int:
    """Slice-update every atom-process coefficient in place.

    Only rows allocated to a block contribute likelihood; a block with no
    allocations is updated against its prior alone.  The multivariate
    logistic link couples a block's m coordinates, so each scalar's target
    rebuilds the block's full atom at the affected rows.
    """
    N, m = beta0z.shape
    p = betaz.shape[2]
    fails = 0
    for jj in range(N):
        rows = np.nonzero(s == jj + 1)[0] if s.size else np.empty(0, np.int64)
        xb = x[rows]
        yb = logyfull[rows]
        b0row = beta0z[jj]
        brows = betaz[jj]

        def loglik() -> float:
            if len(rows) == 0:
                return 0.0
            z = b0row[None, :] + xb @ brows.T                  # (n_b, m)
            th = theta_from_z(z)
            j = _ceil_idx(k, th)
            return float(_dirich_rows(yb, j, k, lg).sum())

        for l in range(m):
            def t_intercept(v: float, l: int = l) -> float:
                old = b0row[l]
                b0row[l] = v
                val = loglik() - v * v / (2.0 * sigma2)
                b0row[l] = old
                return val

            b0row[l], f = _slice_scalar(float(b0row[l]), t_intercept,
                                        width, max_steps, rng)
            fails += f
            for q in range(p):
                def t_slope(v: float, l: int = l, q: int = q) -> float:
                    old = brows[l, q]
                    brows[l, q] = v
                    quad = float(brows[l] @ XtX @ brows[l])
                    val = loglik() - quad / (2.0 * tau)
                    brows[l, q] = old
                    return val

                brows[l, q], f = _slice_scalar(float(brows[l, q]), t_slope,
                                               width, max_steps, rng)
                fails += f
    return fails


# ---------------------------------------------------------------------------
# predictive tabulation

def dirichlet_table(alphas: np.ndarray, logyfull: np.ndarray,
                    lg: np.ndarray) -> np.ndarray:
    """(B, M) table of linear-scale Dirichlet densities.

    Row b holds dir(y | alpha_b) over the whole y grid; zero parts paired
    with exponent > 0 produce density 0.
    """
    alphas = np.asarray(alphas, dtype=np.int64)
    asum = int(alphas[0].sum())
    const = lg[asum] - lg[alphas].sum(axis=1)          # (B,)
    ex = alphas - 1.0                                   # (B, m+1)
    logs = logyfull[None, :, :]                         # (1, M, m+1)
    with np.errstate(invalid="ignore"):
        terms = np.where(ex[:, None, :] > 0, ex[:, None, :] * logs, 0.0)
    nan_fix = np.isneginf(logs) & (ex[:, None, :] > 0)
    terms = np.where(nan_fix, -np.inf, terms)
    return np.exp(const[:, None] + terms.sum(axis=-1))


# ---------------------------------------------------------------------------
# parametric Dirichlet-regression baseline

def _pdr_gamma_logs(x: np.ndarray, beta: np.ndarray, D: int) -> np.ndarray:
    """(n, D) matrix of log gamma_l(x_i); a missing last row means a fixed
    unit parameter (log 0-row appended)."""
    lin = beta[:, 0][None, :] + x @ beta[:, 1:].T       # (n, R)
    if beta.shape[0] == D - 1:
        lin = np.column_stack([lin, np.zeros(len(x))])
    return lin


def pdr_logliks(logyfull: np.ndarray, x: np.ndarray,
                beta: np.ndarray) -> np.ndarray:
    """Per-observation Dirichlet-regression log-likelihoods."""
    from scipy.special import gammaln

    D = logyfull.shape[1]
    g = np.exp(_pdr_gamma_logs(x, beta, D))
    return (gammaln(g.sum(axis=1)) - gammaln(g).sum(axis=1)
            + ((g - 1.0) * logyfull).sum(axis=1))


def pdr_slice_sweep(logyfull: np.ndarray, x: np.ndarray, beta: np.ndarray,
                    sigma2: float, width: float, max_steps: int,
                    rng: np.random.Generator) -> int:
    """Slice-update every Dirichlet-regression coefficient in place."""
    R, P = beta.shape
    fails = 0
    for r in range(R):
        for qq in range(P):
            def target(v: float, r: int = r, qq: int = qq) -> float:
                old = beta[r, qq]
                beta[r, qq] = v
                val = (float(pdr_logliks(logyfull, x, beta).sum())
                       - v * v / (2.0 * sigma2))
                beta[r, qq] = old
                return val

            beta[r, qq], f = _slice_scalar(float(beta[r, qq]), target,
                                           width, max_steps, rng)
            fails += f
    return fails
