"""Numba kernel backend: ``@njit``-compiled twins of ``_numpy_impl``.

Same signatures, same semantics, same RNG call order (numba's
``np.random.Generator`` support draws bit-identically to NumPy's, so both
backends consume one PCG64 stream the same way call-for-call).  Loops are
written scalar-style; log-gamma of the integer Dirichlet parameters comes
from the precomputed ``lg`` table, so the innermost density evaluation is
a handful of lookups and fused multiply-adds.

Slice targets are built term-for-term like the numpy closures (each scalar
sees its own prior term only) so the two backends walk near-identical
trajectories; exact cross-backend bit-identity is still not promised,
because summation order differs.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

NUDGE = 1e-12  # ceiling nudge; keep in sync with bernstein.CEIL_NUDGE

_OPTS = dict(cache=True, fastmath=False, nogil=True)


@njit(**_OPTS)
def _logsig(t: float) -> float:
    """log(sigmoid(t)), stable for large |t|."""
    if t >= 0.0:
        return -math.log1p(math.exp(-t))
    return t - math.log1p(math.exp(t))


@njit(**_OPTS)
def log_stick_from_eta(eta):
    n, N = eta.shape
    out = np.empty((n, N))
    for i in range(n):
        cum = 0.0
        for j in range(N):
            logv = 0.0 if j == N - 1 else _logsig(eta[i, j])
            out[i, j] = logv + cum
            if j < N - 1:
                cum += _logsig(-eta[i, j])
    return out


@njit(**_OPTS)
def theta_from_z(z):
    # ascontiguousarray: reshape of a strided view is not typable
    m = z.shape[-1]
    flat = np.ascontiguousarray(z).reshape(-1, m)
    oflat = np.empty_like(flat)
    for r in range(flat.shape[0]):
        c = 0.0
        for l in range(m):
            if flat[r, l] > c:
                c = flat[r, l]
        denom = math.exp(-c)
        for l in range(m):
            denom += math.exp(flat[r, l] - c)
        for l in range(m):
            oflat[r, l] = math.exp(flat[r, l] - c) / denom
    return oflat.reshape(z.shape)


# ---------------------------------------------------------------------------
# Dirichlet component log-likelihoods

@njit(**_OPTS)
def _dirich_one(logy_row, theta_row, k, lg) -> float:
    """log dir(y | alpha(k, ceil(k * theta))) for one observation."""
    m = theta_row.shape[0]
    km = k + m
    out = lg[km]
    jsum = 0
    for l in range(m):
        jl = int(math.ceil(k * theta_row[l] - NUDGE))
        if jl < 1:
            jl = 1
        elif jl > k:
            jl = k
        jsum += jl
        out -= lg[jl]
        if jl > 1:
            ly = logy_row[l]
            if ly == -np.inf:
                return -np.inf
            out += (jl - 1.0) * ly
    last = km - jsum
    out -= lg[last]
    if last > 1:
        ly = logy_row[m]
        if ly == -np.inf:
            return -np.inf
        out += (last - 1.0) * ly
    return out


@njit(**_OPTS)
def component_logliks(logyfull, theta, k, lg):
    n = theta.shape[0]
    N = theta.shape[1]
    out = np.empty((n, N))
    for i in range(n):
        for j in range(N):
            out[i, j] = _dirich_one(logyfull[i], theta[i, j], k, lg)
    return out


@njit(**_OPTS)
def degree_loglik(logyfull, theta, k, lg) -> float:
    n = logyfull.shape[0]
    tot = 0.0
    for i in range(n):
        tot += _dirich_one(logyfull[i], theta[i], k, lg)
    return tot


# ---------------------------------------------------------------------------
# allocations / mixture rows

@njit(**_OPTS)
def sample_allocations(logw, logl, u):
    n, N = logw.shape
    s = np.zeros(n, dtype=np.int64)
    for i in range(n):
        mx = -np.inf
        for j in range(N):
            t = logw[i, j] + logl[i, j]
            if t > mx:
                mx = t
        if not np.isfinite(mx):
            return np.zeros(n, dtype=np.int64), i
        tot = 0.0
        for j in range(N):
            tot += math.exp(logw[i, j] + logl[i, j] - mx)
        target = u[i] * tot
        acc = 0.0
        pick = N
        for j in range(N):
            acc += math.exp(logw[i, j] + logl[i, j] - mx)
            if target <= acc:
                pick = j + 1
                break
        s[i] = pick
    return s, -1


@njit(**_OPTS)
def mixture_logliks(logw, logl):
    n, N = logw.shape
    out = np.empty(n)
    for i in range(n):
        mx = -np.inf
        for j in range(N):
            t = logw[i, j] + logl[i, j]
            if t > mx:
                mx = t
        if mx == -np.inf:
            out[i] = -np.inf
            continue
        tot = 0.0
        for j in range(N):
            tot += math.exp(logw[i, j] + logl[i, j] - mx)
        out[i] = mx + math.log(tot)
    return out


# ---------------------------------------------------------------------------
# slice-sampled coefficient sweeps
#
# The drivers below inline the shared stepping-out/shrinkage scheme around
# family-specific targets; a scalar slot is addressed as q == -1 for the
# intercept and q >= 0 for slope q, and each target adds exactly the prior
# term belonging to the slot under update.

@njit(**_OPTS)
def _wset(beta0, beta, jj, q, v):
    if q < 0:
        beta0[jj] = v
    else:
        beta[jj, q] = v


@njit(**_OPTS)
def _wtarget(x, s, beta0, beta, jj, q, XtX, tau, sigma2, is_last) -> float:
    p = beta.shape[1]
    if q < 0:
        b0 = beta0[jj]
        t = -b0 * b0 / (2.0 * sigma2)
    else:
        quad = 0.0
        for a in range(p):
            for b in range(p):
                quad += beta[jj, a] * XtX[a, b] * beta[jj, b]
        t = -quad / (2.0 * tau)
    if is_last:
        return t
    c = jj + 1
    for i in range(x.shape[0]):
        si = s[i]
        if si < c:
            continue
        e = beta0[jj]
        for a in range(p):
            e += x[i, a] * beta[jj, a]
        t += _logsig(e) if si == c else _logsig(-e)
    return t


@njit(**_OPTS)
def slice_weight_sweep(x, s, beta0, beta, XtX, tau, sigma2, width,
                       max_steps, rng) -> int:
    N, p = beta.shape
    fails = 0
    for jj in range(N):
        is_last = jj == N - 1
        for q in range(-1, p):
            cur = beta0[jj] if q < 0 else beta[jj, q]
            lp0 = _wtarget(x, s, beta0, beta, jj, q, XtX, tau, sigma2,
                           is_last)
            log_h = lp0 + math.log(rng.random())
            L = cur - width * rng.random()
            R = L + width
            jbud = int(math.floor(max_steps * rng.random()))
            kbud = max_steps - 1 - jbud
            while jbud > 0:
                _wset(beta0, beta, jj, q, L)
                if _wtarget(x, s, beta0, beta, jj, q, XtX, tau, sigma2,
                            is_last) <= log_h:
                    break
                L -= width
                jbud -= 1
            while kbud > 0:
                _wset(beta0, beta, jj, q, R)
                if _wtarget(x, s, beta0, beta, jj, q, XtX, tau, sigma2,
                            is_last) <= log_h:
                    break
                R += width
                kbud -= 1
            accepted = False
            for _ in range(100):
                prop = L + rng.random() * (R - L)
                _wset(beta0, beta, jj, q, prop)
                if _wtarget(x, s, beta0, beta, jj, q, XtX, tau, sigma2,
                            is_last) > log_h:
                    accepted = True
                    break
                if prop < cur:
                    L = prop
                else:
                    R = prop
                if (R - L) <= 1e-14 * (1.0 + abs(cur)):
                    break
            if not accepted:
                _wset(beta0, beta, jj, q, cur)
                fails += 1
    return fails


@njit(**_OPTS)
def _aset(beta0z, betaz, jj, l, q, v):
    if q < 0:
        beta0z[jj, l] = v
    else:
        betaz[jj, l, q] = v


@njit(**_OPTS)
def _atarget(logyfull, x, rows, beta0z, betaz, jj, l, q, k, lg, XtX, tau,
             sigma2) -> float:
    m = beta0z.shape[1]
    p = betaz.shape[2]
    if q < 0:
        b0 = beta0z[jj, l]
        t = -b0 * b0 / (2.0 * sigma2)
    else:
        quad = 0.0
        for a in range(p):
            for b in range(p):
                quad += betaz[jj, l, a] * XtX[a, b] * betaz[jj, l, b]
        t = -quad / (2.0 * tau)
    z = np.empty(m)
    th = np.empty(m)
    for ridx in range(rows.shape[0]):
        i = rows[ridx]
        c = 0.0
        for ll in range(m):
            zl = beta0z[jj, ll]
            for a in range(p):
                zl += x[i, a] * betaz[jj, ll, a]
            z[ll] = zl
            if zl > c:
                c = zl
        denom = math.exp(-c)
        for ll in range(m):
            denom += math.exp(z[ll] - c)
        for ll in range(m):
            th[ll] = math.exp(z[ll] - c) / denom
        t += _dirich_one(logyfull[i], th, k, lg)
    return t


@njit(**_OPTS)
def slice_atom_sweep(logyfull, x, s, beta0z, betaz, k, lg, XtX, tau,
                     sigma2, width, max_steps, rng) -> int:
    N, m = beta0z.shape
    p = betaz.shape[2]
    n = s.shape[0]
    fails = 0
    for jj in range(N):
        cnt = 0
        for i in range(n):
            if s[i] == jj + 1:
                cnt += 1
        rows = np.empty(cnt, dtype=np.int64)
        ridx = 0
        for i in range(n):
            if s[i] == jj + 1:
                rows[ridx] = i
                ridx += 1
        for l in range(m):
            for q in range(-1, p):
                cur = beta0z[jj, l] if q < 0 else betaz[jj, l, q]
                lp0 = _atarget(logyfull, x, rows, beta0z, betaz, jj, l, q,
                               k, lg, XtX, tau, sigma2)
                log_h = lp0 + math.log(rng.random())
                L = cur - width * rng.random()
                R = L + width
                jbud = int(math.floor(max_steps * rng.random()))
                kbud = max_steps - 1 - jbud
                while jbud > 0:
                    _aset(beta0z, betaz, jj, l, q, L)
                    if _atarget(logyfull, x, rows, beta0z, betaz, jj, l, q,
                                k, lg, XtX, tau, sigma2) <= log_h:
                        break
                    L -= width
                    jbud -= 1
                while kbud > 0:
                    _aset(beta0z, betaz, jj, l, q, R)
                    if _atarget(logyfull, x, rows, beta0z, betaz, jj, l, q,
                                k, lg, XtX, tau, sigma2) <= log_h:
                        break
                    R += width
                    kbud -= 1
                accepted = False
                for _ in range(100):
                    prop = L + rng.random() * (R - L)
                    _aset(beta0z, betaz, jj, l, q, prop)
                    if _atarget(logyfull, x, rows, beta0z, betaz, jj, l, q,
                                k, lg, XtX, tau, sigma2) > log_h:
                        accepted = True
                        break
                    if prop < cur:
                        L = prop
                    else:
                        R = prop
                    if (R - L) <= 1e-14 * (1.0 + abs(cur)):
                        break
                if not accepted:
                    _aset(beta0z, betaz, jj, l, q, cur)
                    fails += 1
    return fails


# ---------------------------------------------------------------------------
# predictive tabulation

@njit(**_OPTS)
def dirichlet_table(alphas, logyfull, lg):
    B, mp1 = alphas.shape
    M = logyfull.shape[0]
    asum = 0
    for l in range(mp1):
        asum += alphas[0, l]
    out = np.empty((B, M))
    for b in range(B):
        const = lg[asum]
        for l in range(mp1):
            const -= lg[alphas[b, l]]
        for r in range(M):
            v = const
            dead = False
            for l in range(mp1):
                a = alphas[b, l]
                if a > 1:
                    ly = logyfull[r, l]
                    if ly == -np.inf:
                        dead = True
                        break
                    v += (a - 1.0) * ly
            out[b, r] = 0.0 if dead else math.exp(v)
    return out


# ---------------------------------------------------------------------------
# parametric Dirichlet-regression baseline

@njit(**_OPTS)
def _pdr_loglik_row(logy_row, x_row, beta, D) -> float:
    R, P = beta.shape
    p = P - 1
    gsum = 0.0
    out = 0.0
    for l in range(D):
        if l < R:
            lin = beta[l, 0]
            for a in range(p):
                lin += x_row[a] * beta[l, a + 1]
            g = math.exp(lin)
        else:
            g = 1.0
        gsum += g
        out -= math.lgamma(g)
        out += (g - 1.0) * logy_row[l]
    return out + math.lgamma(gsum)


@njit(**_OPTS)
def pdr_logliks(logyfull, x, beta):
    n, D = logyfull.shape
    out = np.empty(n)
    for i in range(n):
        out[i] = _pdr_loglik_row(logyfull[i], x[i], beta, D)
    return out


@njit(**_OPTS)
def _pdr_target(logyfull, x, beta, r, qq, sigma2) -> float:
    n, D = logyfull.shape
    v = beta[r, qq]
    t = -v * v / (2.0 * sigma2)
    for i in range(n):
        t += _pdr_loglik_row(logyfull[i], x[i], beta, D)
    return t


@njit(**_OPTS)
def pdr_slice_sweep(logyfull, x, beta, sigma2, width, max_steps, rng) -> int:
    nrow, P = beta.shape
    fails = 0
    for r in range(nrow):
        for qq in range(P):
            cur = beta[r, qq]
            lp0 = _pdr_target(logyfull, x, beta, r, qq, sigma2)
            log_h = lp0 + math.log(rng.random())
            L = cur - width * rng.random()
            R = L + width
            jbud = int(math.floor(max_steps * rng.random()))
            kbud = max_steps - 1 - jbud
            while jbud > 0:
                beta[r, qq] = L
                if _pdr_target(logyfull, x, beta, r, qq, sigma2) <= log_h:
                    break
                L -= width
                jbud -= 1
            while kbud > 0:
                beta[r, qq] = R
                if _pdr_target(logyfull, x, beta, r, qq, sigma2) <= log_h:
                    break
                R += width
                kbud -= 1
            accepted = False
            for _ in range(100):
                prop = L + rng.random() * (R - L)
                beta[r, qq] = prop
                if _pdr_target(logyfull, x, beta, r, qq, sigma2) > log_h:
                    accepted = True
                    break
                if prop < cur:
                    L = prop
                else:
                    R = prop
                if (R - L) <= 1e-14 * (1.0 + abs(cur)):
                    break
            if not accepted:
                beta[r, qq] = cur
                fails += 1
    return fails
