"""Density regression for compositional responses on the simplex.

A mixture of Dirichlet kernels indexed by a multivariate polynomial
degree, with covariates entering the mixture weights and/or the kernel
locations through linear predictors, and spike-and-slab indicators
selecting among the four dependency structures.  Includes a full MCMC
sampler, posterior predictive density grids, fit criteria (LPML and an
information criterion), a parametric Dirichlet-regression baseline, and
a simulation-study harness behind a CLI.
"""

from .bernstein import IndexSetH0, alpha_of, ceil_index, enumerate_H0
from .dirichlet_regression import (PdrState, fit_pdr, pdr_log_likelihood,
                                   smithson_transform)
from .inference import (DensityGrid, FitCriteria, default_x_grid,
                        default_y_grid, density_grid_from_function,
                        fit_criteria, integrated_l1, l_infinity, lpml,
                        predictive_density, predictive_density_reference,
                        waic)
from .model import (AtomCoeffs, Dataset, ModelState, PriorConfig,
                    SelectionIndicators, WeightCoeffs, aggregated_weights,
                    conditional_log_density, link_atom, link_weight,
                    log_prior, stick_weights)
from .sampler import ChainConfig, DegenerateAllocationError, \
    PosteriorSamples, run_chain
from .simplex import (SimplexGrid, dirichlet_log_density, simplex_grid,
                      simplex_quadrature, validate_point)
from .simulate import (SCENARIO_TRUTH, Scenario, sample_dataset,
                       true_density_grid, true_log_density)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # simplex
    "SimplexGrid", "dirichlet_log_density", "simplex_grid",
    "simplex_quadrature", "validate_point",
    # polynomial index sets
    "IndexSetH0", "alpha_of", "ceil_index", "enumerate_H0",
    # model
    "AtomCoeffs", "Dataset", "ModelState", "PriorConfig",
    "SelectionIndicators", "WeightCoeffs", "aggregated_weights",
    "conditional_log_density", "link_atom", "link_weight", "log_prior",
    "stick_weights",
    # sampler
    "ChainConfig", "DegenerateAllocationError", "PosteriorSamples",
    "run_chain",
    # inference
    "DensityGrid", "FitCriteria", "default_x_grid", "default_y_grid",
    "density_grid_from_function", "fit_criteria", "integrated_l1",
    "l_infinity", "lpml", "predictive_density",
    "predictive_density_reference", "waic",
    # scenarios
    "SCENARIO_TRUTH", "Scenario", "sample_dataset", "true_density_grid",
    "true_log_density",
    # baseline
    "PdrState", "fit_pdr", "pdr_log_likelihood", "smithson_transform",
]
