"""Replicate-study orchestration: simulate, fit, score, aggregate.

One *cell* is a (scenario, sample size) pair; each cell runs R
replicates, and each replicate's dataset is analyzed once per requested
selection prior.  Aggregation produces two tables: mean integrated-L1
distance, and the proportion of replicates whose posterior-mode
selection indicators agree with the scenario's true dependency
structure.

Seed splitting (documented contract)
------------------------------------
Replicates are split off the base seed by XOR with the replicate index:

    data_seed(cell c, replicate r)  = (base ^ (c * GOLD mod 2^64)) ^ r
    chain_seed(data_seed, prior j)  = data_seed ^ ((j + 1) * SALT mod 2^64)

with GOLD = 0x9E3779B97F4A7C15 and SALT = 0xC2B2AE3D27D4EB4F fixed.
Every replicate is therefore reproducible in isolation, and the whole
study is deterministic given (base seed, configuration), regardless of
worker count.

Failures are contained per replicate: a failed run is reported in the
returned summary and excluded from aggregation; the study completes.
"""

from __future__ import annotations

import io
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import inference
from .config import apply_named_prior, chain_from_config, grid_settings, \
    prior_from_config
from .sampler import run_chain
from .serialization import _write_text, fmt_float
from .simplex import simplex_grid
from .simulate import SCENARIO_TRUTH, Scenario, sample_dataset, \
    true_density_grid

__all__ = [
    "SCALE_PRESETS",
    "data_seed",
    "chain_seed",
    "posterior_mode_gammas",
    "run_replicate",
    "run_study",
    "apply_scale",
]

_MASK = (1 << 64) - 1
_GOLD = 0x9E3779B97F4A7C15
_SALT = 0xC2B2AE3D27D4EB4F

#: Study presets.  "desk" finishes on a workstation; "full" reproduces
#: the original study settings (100 replicates, three sample sizes,
#: 110k-sweep chains with a longer warm-up for the largest size).
SCALE_PRESETS = {
    "desk": {
        "study": {"replicates": 10, "sample_sizes": [250],
                  "scenarios": ["I", "II", "III", "IV"],
                  "priors": ["prior-I"]},
        "chain": {"n_iter": 11000, "burn_in": 1000, "thin": 10},
    },
    "full": {
        "study": {"replicates": 100, "sample_sizes": [250, 500, 1000],
                  "scenarios": ["I", "II", "III", "IV"],
                  "priors": ["prior-I", "prior-II"]},
        "chain": {"n_iter": 110000, "burn_in": 10000, "thin": 10},
    },
}
#: At full scale, chains for this sample size and up warm up longer.
_FULL_LONG_BURN = (1000, 50000)


def apply_scale(cfg: dict, scale: str) -> dict:
    from .config import _deep_merge  # shared merge semantics
    if scale not in SCALE_PRESETS:
        raise ValueError(
            f"unknown scale {scale!r}; expected one of "
            f"{sorted(SCALE_PRESETS)}")
    return _deep_merge(cfg, SCALE_PRESETS[scale])


def data_seed(base_seed: int, cell: int, replicate: int) -> int:
    return ((base_seed ^ ((cell * _GOLD) & _MASK)) ^ replicate) & _MASK


def chain_seed(dseed: int, prior_ordinal: int) -> int:
    return (dseed ^ (((prior_ordinal + 1) * _SALT) & _MASK)) & _MASK


def posterior_mode_gammas(gamma_trace: np.ndarray) -> tuple[int, int]:
    """Most frequent (weights, locations) indicator pair; ties go to the
    lexicographically smaller pair so the mode is deterministic."""
    pairs, counts = np.unique(np.asarray(gamma_trace).reshape(-1, 2),
                              axis=0, return_counts=True)
    best = np.lexsort((pairs[:, 1], pairs[:, 0], -counts))[0]
    return int(pairs[best, 0]), int(pairs[best, 1])


def run_replicate(scenario, n: int, prior_name: str, replicate: int,
                  dseed: int, cseed: int, cfg: dict) -> dict:
    """Simulate one dataset, fit one chain, score it against the truth."""
    scenario = Scenario.parse(scenario)
    data = sample_dataset(scenario, n, dseed)
    prior = prior_from_config(apply_named_prior(cfg, prior_name), data.x)
    chain_cfg = chain_from_config(cfg, seed=cseed)
    samples = run_chain(data, prior, chain_cfg)

    gs = grid_settings(cfg)
    x_grid = inference.default_x_grid(gs["x_points"])
    y_grid = simplex_grid(gs["y_spacing"], kind=gs["y_kind"])
    est = inference.predictive_density(samples, x_grid, y_grid)
    truth = true_density_grid(scenario, x_grid, y_grid)

    mode = posterior_mode_gammas(samples.gamma_trace)
    row = {
        "scenario": scenario.value,
        "prior": prior_name,
        "n": int(n),
        "replicate": int(replicate),
        "data_seed": int(dseed),
        "chain_seed": int(cseed),
        "il1": inference.integrated_l1(est, truth),
        "linf": inference.l_infinity(est, truth),
        "mode_gamma_eta": mode[0],
        "mode_gamma_z": mode[1],
        "agree": int(mode == SCENARIO_TRUTH[scenario]),
        "error": "",
    }
    try:
        row["lpml"] = inference.lpml(samples)[0]
        row["neg_n_waic"] = inference.waic(samples)
    except ValueError:
        row["lpml"] = None
        row["neg_n_waic"] = None
    return row


def _tasks(cfg: dict, base_seed: int) -> list[dict]:
    st = cfg["study"]
    tasks = []
    cells = [(Scenario.parse(s), int(n))
             for s in st["scenarios"] for n in st["sample_sizes"]]
    for cell, (scenario, n) in enumerate(cells):
        for r in range(int(st["replicates"])):
            dseed = data_seed(int(base_seed), cell, r)
            for j, prior_name in enumerate(st["priors"]):
                tasks.append({
                    "scenario": scenario.value, "n": n,
                    "prior_name": prior_name, "replicate": r,
                    "dseed": dseed, "cseed": chain_seed(dseed, j),
                    "cfg": cfg,
                })
    return tasks


def _run_one(task: dict) -> dict:
    try:
        return run_replicate(**task)
    except Exception as exc:  # contained: one bad replicate must not kill a study
        return {
            "scenario": task["scenario"], "prior": task["prior_name"],
            "n": task["n"], "replicate": task["replicate"],
            "data_seed": task["dseed"], "chain_seed": task["cseed"],
            "il1": None, "linf": None, "lpml": None, "neg_n_waic": None,
            "mode_gamma_eta": None, "mode_gamma_z": None, "agree": None,
            "error": f"{type(exc).__name__}: {exc}",
        }


def _worker_init() -> None:
    import os
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                "MKL_NUM_THREADS", "NUMBA_NUM_THREADS"):
        os.environ.setdefault(var, "1")


_SCEN_ORDER = {"I": 0, "II": 1, "III": 2, "IV": 3}


def _sort_key(row: dict):
    return (_SCEN_ORDER[row["scenario"]], row["prior"], row["n"],
            row["replicate"])


def _fmt_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return fmt_float(v)
    return str(v)


_REPL_COLS = ["scenario", "prior", "n", "replicate", "data_seed",
              "chain_seed", "il1", "linf", "lpml", "neg_n_waic",
              "mode_gamma_eta", "mode_gamma_z", "agree", "error"]


def aggregate(rows: list[dict]) -> tuple[list[dict], list[dict]]:
    """Mean IL1 and agreement proportion per (scenario, prior, n) over
    successful replicates, in deterministic output order."""
    groups: dict[tuple, list[dict]] = {}
    for row in sorted(rows, key=_sort_key):
        groups.setdefault((row["scenario"], row["prior"], row["n"]),
                          []).append(row)
    il1_rows, agree_rows = [], []
    for (scenario, prior, n), members in groups.items():
        ok = [r for r in members if not r["error"]]
        il1_rows.append({
            "scenario": scenario, "prior": prior, "n": n,
            "mean_il1": (float(np.mean([r["il1"] for r in ok]))
                         if ok else None)})
        agree_rows.append({
            "scenario": scenario, "prior": prior, "n": n,
            "agreement": (float(np.mean([r["agree"] for r in ok]))
                          if ok else None)})
    return il1_rows, agree_rows


def _write_rows_csv(path, cols: list[str], rows: list[dict]) -> Path:
    buf = io.StringIO()
    buf.write(",".join(cols) + "\n")
    for row in rows:
        buf.write(",".join(_fmt_cell(row[c]) for c in cols) + "\n")
    return _write_text(path, buf.getvalue())


def run_study(cfg: dict, base_seed: int, out_dir, jobs: int = 1) -> dict:
    """Run the configured study; write replicate and aggregate CSVs.

    Returns a summary dict with the output paths, per-replicate rows,
    and the list of failed replicates (aggregation covers successes
    only; failures never abort the study).
    """
    out_dir = Path(out_dir)
    tasks = _tasks(cfg, base_seed)
    if jobs <= 1:
        rows = [_run_one(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=jobs,
                                 initializer=_worker_init) as pool:
            rows = list(pool.map(_run_one, tasks))
    rows.sort(key=_sort_key)

    il1_rows, agree_rows = aggregate(rows)
    paths = {
        "replicates": _write_rows_csv(out_dir / "replicates.csv",
                                      _REPL_COLS, rows),
        "mean_il1": _write_rows_csv(out_dir / "mean_il1.csv",
                                    ["scenario", "prior", "n", "mean_il1"],
                                    il1_rows),
        "agreement": _write_rows_csv(out_dir / "agreement.csv",
                                     ["scenario", "prior", "n", "agreement"],
                                     agree_rows),
    }
    failures = [r for r in rows if r["error"]]
    return {"paths": paths, "rows": rows, "failures": failures,
            "n_tasks": len(tasks), "n_failed": len(failures)}
