"""Configuration loading, validation, and translation to runtime objects.

Configuration lives in one YAML document.  A versioned defaults file
ships inside the package; user files override it by deep merge, so a
config file only needs the keys it changes.  Validation errors always
name the offending key by its dotted path (``chain.burn_in``).
"""

from __future__ import annotations

import copy
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from .model import PriorConfig
from .sampler import ChainConfig

__all__ = [
    "ConfigError",
    "NAMED_PRIORS",
    "default_config",
    "load_config",
    "serialize_config",
    "validate_config",
    "apply_named_prior",
    "prior_from_config",
    "chain_from_config",
    "pdr_settings",
    "grid_settings",
]


class ConfigError(ValueError):
    """Schema violation; the message carries the dotted key path."""


#: Named selection-prior presets: sharper t favors sparser structures.
NAMED_PRIORS = {"prior-I": 2.0, "prior-II": 10.0}

_NUMERIC = (int, float)

# key -> (type-tuple, predicate, description)
_SCHEMA = {
    "schema": (int, lambda v: v == 1, "must be 1"),
    "prior.lam": (_NUMERIC, lambda v: v > 0, "must be positive"),
    "prior.sigma2_eta": (_NUMERIC, lambda v: v > 0, "must be positive"),
    "prior.sigma2_z": (_NUMERIC, lambda v: v > 0, "must be positive"),
    "prior.tau1_eta": (_NUMERIC, lambda v: v > 0, "must be positive"),
    "prior.tau2_eta": (_NUMERIC, lambda v: v > 0, "must be positive"),
    "prior.tau1_z": (_NUMERIC, lambda v: v > 0, "must be positive"),
    "prior.tau2_z": (_NUMERIC, lambda v: v > 0, "must be positive"),
    "prior.t": (_NUMERIC, lambda v: v > 1, "must exceed 1"),
    "prior.N": (int, lambda v: v >= 1, "must be a positive integer"),
    "chain.n_iter": (int, lambda v: v >= 1, "must be a positive integer"),
    "chain.burn_in": (int, lambda v: v >= 0, "must be a nonnegative integer"),
    "chain.thin": (int, lambda v: v >= 1, "must be a positive integer"),
    "chain.seed": (int, lambda v: 0 <= v < 2 ** 64, "must fit in 64 bits"),
    "chain.slice_width": (_NUMERIC, lambda v: v > 0, "must be positive"),
    "chain.slice_max_doublings": (int, lambda v: v >= 1,
                                  "must be a positive integer"),
    "chain.k_proposal_halfwidth": (int, lambda v: v >= 1,
                                   "must be a positive integer"),
    "pdr.prior_variance": (_NUMERIC, lambda v: v > 0, "must be positive"),
    "pdr.variant": (str, lambda v: v in ("full", "fixed-last"),
                    "must be 'full' or 'fixed-last'"),
    "grid.x_points": (int, lambda v: v >= 1, "must be a positive integer"),
    "grid.y_spacing": (_NUMERIC, lambda v: 0 < v < 1, "must lie in (0, 1)"),
    "grid.y_kind": (str, lambda v: v in ("interior", "quadrature", "closed"),
                    "must be 'interior', 'quadrature', or 'closed'"),
    "study.replicates": (int, lambda v: v >= 1, "must be a positive integer"),
    "study.sample_sizes": (list, lambda v: len(v) > 0 and all(
        isinstance(n, int) and n >= 1 for n in v),
        "must be a nonempty list of positive integers"),
    "study.scenarios": (list, lambda v: len(v) > 0 and all(
        str(s).upper() in ("I", "II", "III", "IV") for s in v),
        "entries must be among I, II, III, IV"),
    "study.priors": (list, lambda v: len(v) > 0 and all(
        s in NAMED_PRIORS for s in v),
        f"entries must be among {sorted(NAMED_PRIORS)}"),
}

_SECTIONS = {"prior", "chain", "pdr", "grid", "study"}


def default_config() -> dict:
    """The packaged defaults as a fresh dict."""
    text = resources.files("dmbpp").joinpath("defaults.yaml").read_text(
        encoding="utf-8")
    return yaml.safe_load(text)


def _deep_merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, val in override.items():
        here = f"{path}.{key}" if path else str(key)
        if isinstance(val, dict):
            if not isinstance(out.get(key), dict):
                raise ConfigError(f"{here}: not a config section")
            out[key] = _deep_merge(out[key], val, here)
        else:
            out[key] = copy.deepcopy(val)
    return out


def _lookup(cfg: dict, dotted: str):
    node = cfg
    for part in dotted.split("."):
        if not isinstance(node, dict) or part not in node:
            raise ConfigError(f"missing config key: {dotted}")
        node = node[part]
    return node


def validate_config(cfg: dict) -> dict:
    """Check every required key exists with a legal value; reject unknowns."""
    if not isinstance(cfg, dict):
        raise ConfigError("top level: config must be a mapping")
    known_top = _SECTIONS | {"schema"}
    for key in cfg:
        if key not in known_top:
            raise ConfigError(f"unknown config key: {key}")
    for section in _SECTIONS:
        node = _lookup(cfg, section)
        if not isinstance(node, dict):
            raise ConfigError(f"{section}: not a config section")
        allowed = {d.split(".", 1)[1] for d in _SCHEMA
                   if d.startswith(section + ".")}
        for key in node:
            if key not in allowed:
                raise ConfigError(f"unknown config key: {section}.{key}")
    for dotted, (types, pred, desc) in _SCHEMA.items():
        val = _lookup(cfg, dotted)
        # bool is an int subclass; never a legal numeric config value
        if isinstance(val, bool) or not isinstance(val, types):
            raise ConfigError(
                f"{dotted}: expected "
                f"{getattr(types, '__name__', 'number')}, "
                f"got {type(val).__name__}")
        if not pred(val):
            raise ConfigError(f"{dotted}: {desc} (got {val!r})")
    return cfg


def load_config(path=None, overrides: dict | None = None) -> dict:
    """Defaults <- optional YAML file <- optional override dict, validated."""
    cfg = default_config()
    if path is not None:
        text = Path(path).read_text(encoding="utf-8")
        user = yaml.safe_load(text)
        if user is None:
            user = {}
        if not isinstance(user, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
        cfg = _deep_merge(cfg, user)
    if overrides:
        cfg = _deep_merge(cfg, overrides)
    return validate_config(cfg)


def serialize_config(cfg: dict) -> str:
    """Canonical YAML (sorted keys); parse -> serialize -> parse is identity."""
    return yaml.safe_dump(cfg, sort_keys=True, default_flow_style=False)


def apply_named_prior(cfg: dict, name: str) -> dict:
    """Return a copy of cfg with the named selection-prior preset applied."""
    if name not in NAMED_PRIORS:
        raise ConfigError(
            f"unknown named prior {name!r}; expected one of "
            f"{sorted(NAMED_PRIORS)}")
    return _deep_merge(cfg, {"prior": {"t": NAMED_PRIORS[name]}})


def prior_from_config(cfg: dict, x: np.ndarray) -> PriorConfig:
    pr = cfg["prior"]
    return PriorConfig.from_design(
        np.asarray(x, dtype=float),
        lam=float(pr["lam"]),
        sigma2_eta=float(pr["sigma2_eta"]), sigma2_z=float(pr["sigma2_z"]),
        tau1_eta=float(pr["tau1_eta"]), tau2_eta=float(pr["tau2_eta"]),
        tau1_z=float(pr["tau1_z"]), tau2_z=float(pr["tau2_z"]),
        t=float(pr["t"]), N=int(pr["N"]))


def chain_from_config(cfg: dict, seed=None) -> ChainConfig:
    ch = cfg["chain"]
    return ChainConfig(
        n_iter=int(ch["n_iter"]), burn_in=int(ch["burn_in"]),
        thin=int(ch["thin"]),
        seed=int(ch["seed"] if seed is None else seed),
        slice_width=float(ch["slice_width"]),
        slice_max_doublings=int(ch["slice_max_doublings"]),
        k_proposal_halfwidth=int(ch["k_proposal_halfwidth"]))


def pdr_settings(cfg: dict) -> dict:
    return {"prior_variance": float(cfg["pdr"]["prior_variance"]),
            "variant": str(cfg["pdr"]["variant"])}


def grid_settings(cfg: dict) -> dict:
    return {"x_points": int(cfg["grid"]["x_points"]),
            "y_spacing": float(cfg["grid"]["y_spacing"]),
            "y_kind": str(cfg["grid"]["y_kind"])}
