"""Hot numeric kernels with two interchangeable backends.

The sampler and predictive-grid code route every inner loop through the
functions re-exported here.  Two implementations exist:

* ``_numba_impl`` — ``@njit``-compiled loops (the default when numba
  imports cleanly); one shared ``numpy.random.Generator`` is passed into
  the jitted slice-sampling sweeps.
* ``_numpy_impl`` — pure, vectorized NumPy.  Semantically equivalent
  (tested), roughly an order of magnitude slower on the sweep kernels.

Selection: environment variable ``DMBPP_BACKEND`` = ``numba`` or
``numpy``, read once at import; ``set_backend()`` overrides at runtime
(used by tests and the benchmark).  Chains are deterministic given a seed
*within* a backend; the two backends may diverge bitwise because
floating-point reduction order differs.
"""

from __future__ import annotations

import os
from types import ModuleType

__all__ = ["active", "backend_name", "load_backend", "set_backend", "KERNEL_NAMES"]

#: the shared kernel surface; both implementations export exactly these.
KERNEL_NAMES = [
    "log_stick_from_eta",
    "theta_from_z",
    "component_logliks",
    "sample_allocations",
    "mixture_logliks",
    "degree_loglik",
    "slice_weight_sweep",
    "slice_atom_sweep",
    "dirichlet_table",
    "pdr_logliks",
    "pdr_slice_sweep",
]


def load_backend(name: str) -> ModuleType:
    """Import and return one backend module by name."""
    if name == "numpy":
        from . import _numpy_impl

        return _numpy_impl
    if name == "numba":
        from . import _numba_impl

        return _numba_impl
    raise ValueError(f"unknown backend {name!r}; expected 'numba' or 'numpy'")


def _default_name() -> str:
    env = os.environ.get("DMBPP_BACKEND", "").strip().lower()
    if env in ("numba", "numpy"):
        return env
    if env:
        raise ValueError(f"DMBPP_BACKEND={env!r} not recognized (use numba|numpy)")
    try:
        import numba  # noqa: F401

        return "numba"
    except ImportError:
        return "numpy"


_ACTIVE_NAME = _default_name()
_ACTIVE: ModuleType | None = None


def active() -> ModuleType:
    """The currently selected backend module (imported lazily)."""
    global _ACTIVE
    if _ACTIVE is None:
        _ACTIVE = load_backend(_ACTIVE_NAME)
    return _ACTIVE


def backend_name() -> str:
    return _ACTIVE_NAME


def set_backend(name: str) -> None:
    """Switch backends at runtime (affects subsequent kernel calls)."""
    global _ACTIVE, _ACTIVE_NAME
    _ACTIVE = load_backend(name)
    _ACTIVE_NAME = name
