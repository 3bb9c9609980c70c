"""Synthetic data generators for the four benchmark scenarios.

Each scenario is a finite mixture of Dirichlet densities on the
2-simplex with a univariate predictor on (0, 1).  They differ in which
parts of the mixture move with the predictor, which is what the
selection indicators of the regression model are supposed to recover:

    I    weights and Dirichlet parameters both predictor-dependent
    II   constant weights (0.6, 0.2, 0.2), parameters predictor-dependent
    III  predictor-dependent weights, constant parameters
    IV   a single fixed Dirichlet, nothing depends on the predictor

Sampling draws the predictor uniformly, picks a component from the
scenario's weights at that predictor value, and draws the composition
from the selected Dirichlet via normalized Gamma variates.
"""

from __future__ import annotations

import enum

import numpy as np
from scipy.special import logsumexp

from .inference import DensityGrid
from .model import Dataset
from .simplex import SimplexGrid, validate_point

__all__ = [
    "Scenario",
    "SCENARIO_TRUTH",
    "mixing_weight",
    "scenario_mixture",
    "true_log_density",
    "true_density_grid",
    "sample_dataset",
]


class Scenario(enum.Enum):
    I = "I"
    II = "II"
    III = "III"
    IV = "IV"

    @classmethod
    def parse(cls, value) -> "Scenario":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().upper())
        except ValueError:
            raise ValueError(
                f"unknown scenario {value!r}; expected one of I, II, III, IV"
            ) from None


#: True dependency structure (weights-dependent, parameters-dependent)
#: that a correct model selector should recover for each scenario.
SCENARIO_TRUTH: dict[Scenario, tuple[int, int]] = {
    Scenario.I: (1, 1),
    Scenario.II: (0, 1),
    Scenario.III: (1, 0),
    Scenario.IV: (0, 0),
}


def mixing_weight(x: float) -> float:
    """First mixture weight x / (4 - 3x) used by scenarios I and III."""
    return x / (4.0 - 3.0 * x)


def _check_x(x: float) -> float:
    x = float(x)
    if not 0.0 < x < 1.0:
        raise ValueError(f"predictor must lie strictly in (0, 1), got {x}")
    return x


def _params_moving(x: float) -> list[np.ndarray]:
    """The three predictor-dependent Dirichlet parameter curves."""
    return [
        np.array([25.0 - 20.0 * x, 5.0 + 25.0 * x, 3.0]),
        np.array([5.0, 5.0 + 15.0 * x, 30.0 - 17.0 * x]),
        np.array([5.0 + 9.0 * x, 30.0 + 9.0 * x, 3.0 + 9.0 * x]),
    ]


def scenario_mixture(scenario, x: float) \
        -> tuple[np.ndarray, list[np.ndarray]]:
    """Mixture weights and Dirichlet parameter vectors at predictor x."""
    scenario = Scenario.parse(scenario)
    x = _check_x(x)
    th = _params_moving(x)
    if scenario is Scenario.I:
        w1 = mixing_weight(x)
        return np.array([w1, 1.0 - w1]), [th[0], th[1]]
    if scenario is Scenario.II:
        return np.array([0.6, 0.2, 0.2]), th
    if scenario is Scenario.III:
        w1 = mixing_weight(x)
        return np.array([w1, 1.0 - w1]), [
            np.array([10.0, 12.0, 12.0]),
            np.array([24.0, 6.0, 6.0]),
        ]
    return np.array([1.0]), [np.array([35.0, 25.0, 40.0])]


def _dirichlet_log_rows(yfull: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    from scipy.special import gammaln
    return (gammaln(alpha.sum()) - gammaln(alpha).sum()
            + ((alpha - 1.0) * np.log(yfull)).sum(axis=1))


def true_log_density(scenario, y, x: float):
    """Exact log density of the scenario mixture at (y, x).

    y may be a single point (m free coordinates) or an (M, m) stack of
    interior points; the predictor must lie strictly inside (0, 1).
    """
    weights, alphas = scenario_mixture(scenario, x)
    y = np.asarray(y, dtype=float)
    single = y.ndim == 1
    rows = y.reshape(1, -1) if single else y
    full = np.empty((len(rows), rows.shape[1] + 1))
    for i, r in enumerate(rows):
        pt = validate_point(r)
        last = 1.0 - pt.sum()
        if pt.min() <= 0.0 or last <= 0.0:
            raise ValueError(
                "true densities are evaluated at strictly interior points; "
                f"row {i} touches the boundary")
        full[i, :-1] = pt
        full[i, -1] = last
    parts = np.stack([np.log(w) + _dirichlet_log_rows(full, a)
                      for w, a in zip(weights, alphas)])
    out = logsumexp(parts, axis=0)
    return float(out[0]) if single else out


def true_density_grid(scenario, x_grid: np.ndarray,
                      y_grid: SimplexGrid) -> DensityGrid:
    """Tabulated scenario density over a covariate grid x simplex lattice."""
    x_grid = np.atleast_2d(np.asarray(x_grid, dtype=float))
    if x_grid.shape[1] != 1:
        raise ValueError("scenario densities use a single predictor")
    values = np.stack([
        np.exp(true_log_density(scenario, y_grid.points, float(x[0])))
        for x in x_grid])
    return DensityGrid(x_grid=x_grid, y_grid=y_grid, values=values)


def sample_dataset(scenario, n: int, seed) -> Dataset:
    """Draw n (composition, predictor) pairs from the scenario.

    Predictors are uniform on (0, 1); the mixture component is selected
    by a single uniform against the cumulative weights; the composition
    is a normalized vector of Gamma draws.  Deterministic given seed.
    """
    scenario = Scenario.parse(scenario)
    n = int(n)
    if n < 1:
        raise ValueError(f"need at least one observation, got n={n}")
    rng = np.random.default_rng(seed)
    x = rng.random(n)
    yfull = np.empty((n, 3))
    for i in range(n):
        weights, alphas = scenario_mixture(scenario, x[i])
        u = rng.random()
        c, acc = 0, 0.0
        for c, w in enumerate(weights):
            acc += w
            if u <= acc:
                break
        g = rng.standard_gamma(alphas[c])
        yfull[i] = g / g.sum()
    return Dataset(y=yfull[:, :2], x=x.reshape(-1, 1))
