"""Modified Bernstein-polynomial machinery on the simplex.

For a degree ``k`` and dimension ``m`` the index set

    H0(k, m) = { j in {1..k}^m : sum(j) <= k + m - 1 }

has cardinality C(k-1+m, m).  Each index ``j`` carries the Dirichlet
parameter vector ``alpha(k, j) = (j_1, ..., j_m, k + m - sum(j))`` whose
entries are positive integers summing to ``k + m``.  A mixing measure
placed on the lattice cells ``((j_1-1)/k, j_1/k] x ...`` turns the set
into a finite Dirichlet mixture; an interior atom ``theta`` lands in the
cell indexed by ``ceil(k * theta)`` componentwise.
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .simplex import dirichlet_log_density, validate_point

__all__ = [
    "K_CAP",
    "IndexSetH0",
    "enumerate_H0",
    "ceil_index",
    "alpha_of",
    "mbp_mixture_log_density",
]

#: hard cap on the degree; bounds the H0 cache (Poisson(25) mass above
#: 200 is < 1e-80, so the cap is never felt in practice).
K_CAP = 200

#: nudge subtracted before the ceiling so exact lattice hits (k*theta an
#: integer) resolve identically across floating-point environments.
CEIL_NUDGE = 1e-12


@dataclass(frozen=True)
class IndexSetH0:
    """Eagerly enumerated index set for one ``(k, m)`` pair.

    ``indices`` is lexicographically ordered, shape ``(B, m)`` int64.
    ``keys`` are the mixed-radix encodings ``sum_l j_l * (k+1)**(m-l)``,
    ascending because the enumeration is lexicographic; they give O(log B)
    rank lookup via ``searchsorted`` (used when aggregating atom weights
    onto the lattice).
    """

    k: int
    m: int
    indices: np.ndarray
    keys: np.ndarray

    def __len__(self) -> int:
        return len(self.indices)

    def rank(self, j: np.ndarray) -> int:
        """Position of index vector ``j`` in the enumeration."""
        j = np.asarray(j, dtype=np.int64)
        key = 0
        for jl in j:
            key = key * (self.k + 1) + int(jl)
        pos = int(np.searchsorted(self.keys, key))
        if pos >= len(self.keys) or self.keys[pos] != key:
            raise ValueError(f"index {tuple(j)} not in H0(k={self.k}, m={self.m})")
        return pos

    def alphas(self) -> np.ndarray:
        """All alpha(k, j) rows, shape ``(B, m+1)`` int64."""
        last = self.k + self.m - self.indices.sum(axis=1)
        return np.column_stack([self.indices, last]).astype(np.int64)


_CACHE: dict[tuple[int, int], IndexSetH0] = {}
_CACHE_LOCK = threading.Lock()


def enumerate_H0(k: int, m: int) -> IndexSetH0:
    """Enumerate (and cache) H0(k, m) in lexicographic order."""
    if k < 1:
        raise ValueError(f"degree must be >= 1, got {k}")
    if k > K_CAP:
        raise ValueError(f"degree {k} exceeds the hard cap {K_CAP}")
    if m < 1:
        raise ValueError(f"dimension must be >= 1, got {m}")
    got = _CACHE.get((k, m))
    if got is not None:
        return got

    rows: list[tuple[int, ...]] = []

    def rec(prefix: tuple[int, ...], remaining: int, budget: int) -> None:
        if remaining == 0:
            rows.append(prefix)
            return
        # later coordinates need at least 1 each
        cap = min(k, budget - (remaining - 1))
        for j in range(1, cap + 1):
            rec(prefix + (j,), remaining - 1, budget - j)

    rec((), m, k + m - 1)
    idx = np.array(rows, dtype=np.int64).reshape(-1, m)
    base = k + 1
    keys = np.zeros(len(idx), dtype=np.int64)
    for col in range(m):
        keys = keys * base + idx[:, col]
    out = IndexSetH0(k=k, m=m, indices=idx, keys=keys)
    with _CACHE_LOCK:
        return _CACHE.setdefault((k, m), out)


def ceil_index(k: int, theta: np.ndarray) -> np.ndarray:
    """Componentwise ``ceil(k * theta)`` with the deterministic nudge.

    ``theta`` must be strictly interior; the result lies in H0(k, m).
    """
    theta = validate_point(theta)
    if np.any(theta <= 0) or theta.sum() >= 1.0:
        raise ValueError("ceil_index requires a strictly interior point")
    j = np.ceil(k * theta - CEIL_NUDGE).astype(np.int64)
    return np.maximum(j, 1)


def alpha_of(k: int, j: np.ndarray) -> np.ndarray:
    """Dirichlet parameters ``(j, k + m - sum(j))`` for ``j`` in H0(k, m)."""
    j = np.asarray(j, dtype=np.int64)
    m = j.size
    if np.any(j < 1) or np.any(j > k) or j.sum() > k + m - 1:
        raise ValueError(f"index {tuple(j)} not in H0(k={k}, m={m})")
    return np.concatenate([j, [k + m - j.sum()]])


def mbp_mixture_log_density(y: np.ndarray, k: int, weights) -> float:
    """Log density of the weighted Dirichlet mixture over H0(k, m).

    ``weights`` is either a mapping ``tuple(j) -> weight`` or a vector
    aligned with ``enumerate_H0(k, m).indices``.  Weights must be
    nonnegative and sum to 1 (error beyond 1e-6 deviation).
    """
    y = validate_point(y)
    h0 = enumerate_H0(k, y.size)
    if isinstance(weights, dict):
        w = np.zeros(len(h0))
        for j, val in weights.items():
            w[h0.rank(np.asarray(j))] = val
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != (len(h0),):
            raise ValueError(
                f"weight vector must align with H0 (length {len(h0)}), got {w.shape}"
            )
    if np.any(w < 0):
        raise ValueError("mixture weights must be nonnegative")
    if abs(w.sum() - 1.0) > 1e-6:
        raise ValueError(f"mixture weights sum to {w.sum()}, expected 1")

    logs = np.full(len(h0), -np.inf)
    live = np.nonzero(w > 0)[0]
    for pos in live:
        logs[pos] = math.log(w[pos]) + dirichlet_log_density(y, h0.alphas()[pos])
    return float(logsumexp(logs))
