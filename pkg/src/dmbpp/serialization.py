"""File formats for datasets, posterior samples, grids, and manifests.

Everything here is byte-deterministic given identical inputs: floats are
written with Python's shortest round-trip ``repr``, JSON objects use
sorted keys and fixed separators, and rows follow documented orders.
The run manifest is the single exception — it records wall-clock time
and is excluded from byte-identity contracts.

Formats
-------
dataset CSV      header ``y1,…,ym,x1,…,xp``; one observation per row.
samples JSONL    line 1: a header record ``{"record":"header",…}`` with
                 the model kind, schema version, meta, and scalar
                 diagnostics; every further line one retained state.
loglik CSV       one row per retained draw, one column per observation,
                 no header (shape lives in the samples header record).
traces CSV       header ``draw,k,gamma_eta,gamma_z,log_posterior``.
density-grid CSV header ``x1,…,xp,y1,y2,density``; covariate-major rows.
metrics JSON     object with keys ``il1, linf, lpml, neg_n_waic``.
manifest JSON    command, seed, config digest, inputs, outputs with
                 sha256 hashes, versions, wall-clock seconds.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import sys
from pathlib import Path

import numpy as np

from .dirichlet_regression import PdrState
from .inference import DensityGrid
from .model import (AtomCoeffs, Dataset, ModelState, SelectionIndicators,
                    WeightCoeffs)
from .sampler import PosteriorSamples
from .simplex import SimplexGrid

__all__ = [
    "fmt_float",
    "sha256_file",
    "sha256_bytes",
    "canonical_json",
    "write_dataset_csv",
    "read_dataset_csv",
    "write_samples_files",
    "read_samples_files",
    "write_density_grid_csv",
    "read_density_grid_csv",
    "write_metrics_json",
    "read_metrics_json",
    "write_manifest",
]

SCHEMA_VERSION = 1


def fmt_float(v: float) -> str:
    """Shortest decimal string that round-trips to the same double."""
    return repr(float(v))


def sha256_bytes(data: bytes) -> str:
    return "sha256:" + hashlib.sha256(data).hexdigest()


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return "sha256:" + h.hexdigest()


def _py(obj):
    """Convert numpy containers/scalars to plain Python for JSON."""
    if isinstance(obj, np.ndarray):
        return [_py(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, dict):
        return {k: _py(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_py(v) for v in obj]
    return obj


def canonical_json(obj) -> str:
    """Sorted-key, fixed-separator JSON used everywhere for determinism."""
    return json.dumps(_py(obj), sort_keys=True, separators=(",", ":"),
                      allow_nan=True)


def _write_text(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# datasets

def write_dataset_csv(data: Dataset, path) -> Path:
    cols = [f"y{j + 1}" for j in range(data.m)] \
        + [f"x{j + 1}" for j in range(data.p)]
    buf = io.StringIO()
    buf.write(",".join(cols) + "\n")
    for i in range(data.n):
        row = [fmt_float(v) for v in data.y[i]] \
            + [fmt_float(v) for v in data.x[i]]
        buf.write(",".join(row) + "\n")
    return _write_text(path, buf.getvalue())


def read_dataset_csv(path) -> Dataset:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty dataset file")
    header = [c.strip() for c in rows[0]]
    m = sum(1 for c in header if c.startswith("y"))
    p = sum(1 for c in header if c.startswith("x"))
    want = [f"y{j + 1}" for j in range(m)] + [f"x{j + 1}" for j in range(p)]
    if header != want or m < 1 or p < 1:
        raise ValueError(
            f"{path}: expected a header like y1,…,ym,x1,…,xp, got {header}")
    body = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
    body = body.reshape(-1, m + p)
    return Dataset(y=body[:, :m], x=body[:, m:])


# ---------------------------------------------------------------------------
# posterior samples (JSONL + loglik CSV + traces CSV)

def _state_record(state) -> dict:
    if isinstance(state, ModelState):
        return {
            "record": "state",
            "k": int(state.k),
            "beta0_eta": state.weights_coeffs.beta0_eta,
            "beta_eta": state.weights_coeffs.beta_eta,
            "beta0_z": state.atom_coeffs.beta0_z,
            "beta_z": state.atom_coeffs.beta_z,
            "gamma_eta": int(state.gammas.gamma_eta),
            "gamma_z": int(state.gammas.gamma_z),
            "allocations": state.allocations,
        }
    if isinstance(state, PdrState):
        return {"record": "state", "beta": state.beta}
    raise TypeError(f"cannot serialize state of type {type(state).__name__}")


def _state_from_record(rec: dict, model: str):
    if model == "pdr":
        return PdrState(beta=np.array(rec["beta"], dtype=float))
    return ModelState(
        k=int(rec["k"]),
        weights_coeffs=WeightCoeffs(
            beta0_eta=np.array(rec["beta0_eta"], dtype=float),
            beta_eta=np.array(rec["beta_eta"], dtype=float)),
        atom_coeffs=AtomCoeffs(
            beta0_z=np.array(rec["beta0_z"], dtype=float),
            beta_z=np.array(rec["beta_z"], dtype=float)),
        gammas=SelectionIndicators(gamma_eta=int(rec["gamma_eta"]),
                                   gamma_z=int(rec["gamma_z"])),
        allocations=np.array(rec["allocations"], dtype=np.int64),
    )


def write_samples_files(samples: PosteriorSamples, out_dir) -> dict[str, Path]:
    """Write samples.jsonl, loglik.csv, and traces.csv under out_dir."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    T = samples.n_retained

    scalar_diag = {k: v for k, v in samples.diagnostics.items()
                   if np.isscalar(v) or isinstance(v, (int, float))}
    header = {
        "record": "header",
        "format": "posterior-samples",
        "schema": SCHEMA_VERSION,
        "model": samples.meta.get("model", "dmbpp"),
        "n_retained": T,
        "meta": samples.meta,
        "diagnostics": scalar_diag,
    }
    lines = [canonical_json(header)]
    lines += [canonical_json(_state_record(st)) for st in samples.states]
    samples_path = _write_text(out_dir / "samples.jsonl",
                               "\n".join(lines) + "\n")

    buf = io.StringIO()
    for row in samples.loglik_matrix:
        buf.write(",".join(fmt_float(v) for v in row) + "\n")
    loglik_path = _write_text(out_dir / "loglik.csv", buf.getvalue())

    lp = np.asarray(samples.diagnostics.get("log_posterior_trace",
                                            np.full(T, np.nan)))
    buf = io.StringIO()
    buf.write("draw,k,gamma_eta,gamma_z,log_posterior\n")
    for t in range(T):
        buf.write(f"{t + 1},{int(samples.k_trace[t])},"
                  f"{int(samples.gamma_trace[t, 0])},"
                  f"{int(samples.gamma_trace[t, 1])},"
                  f"{fmt_float(lp[t])}\n")
    traces_path = _write_text(out_dir / "traces.csv", buf.getvalue())

    return {"samples": samples_path, "loglik": loglik_path,
            "traces": traces_path}


def read_samples_files(out_dir) -> PosteriorSamples:
    """Reconstruct a PosteriorSamples from write_samples_files output."""
    out_dir = Path(out_dir)
    text = (out_dir / "samples.jsonl").read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError(f"{out_dir}/samples.jsonl: empty file")
    header = json.loads(lines[0])
    if header.get("record") != "header":
        raise ValueError(
            f"{out_dir}/samples.jsonl: first line is not a header record")
    if header.get("schema") != SCHEMA_VERSION:
        raise ValueError(
            f"{out_dir}/samples.jsonl: schema {header.get('schema')} "
            f"unsupported (expected {SCHEMA_VERSION})")
    model = header.get("model", "dmbpp")
    states = [_state_from_record(json.loads(ln), model) for ln in lines[1:]]
    if len(states) != header.get("n_retained"):
        raise ValueError(
            f"{out_dir}/samples.jsonl: header promises "
            f"{header.get('n_retained')} states, found {len(states)}")

    n = int(header["meta"].get("n", 0))
    ll_text = (out_dir / "loglik.csv").read_text(encoding="utf-8")
    ll_rows = [[float(v) for v in ln.split(",")]
               for ln in ll_text.splitlines() if ln.strip()]
    loglik = (np.array(ll_rows, dtype=float) if ll_rows
              else np.zeros((len(states), n)))

    with open(out_dir / "traces.csv", newline="", encoding="utf-8") as fh:
        tr = list(csv.DictReader(fh))
    k_trace = np.array([int(r["k"]) for r in tr], dtype=np.int64)
    gamma_trace = np.array([[int(r["gamma_eta"]), int(r["gamma_z"])]
                            for r in tr], dtype=np.int64).reshape(-1, 2)
    log_post = np.array([float(r["log_posterior"]) for r in tr])

    diagnostics = dict(header.get("diagnostics", {}))
    diagnostics["log_posterior_trace"] = log_post
    return PosteriorSamples(
        states=states, loglik_matrix=loglik, gamma_trace=gamma_trace,
        k_trace=k_trace, diagnostics=diagnostics, meta=header["meta"])


# ---------------------------------------------------------------------------
# density grids

def write_density_grid_csv(grid: DensityGrid, path) -> Path:
    L, p = grid.x_grid.shape
    cols = [f"x{j + 1}" for j in range(p)] + ["y1", "y2", "density"]
    buf = io.StringIO()
    buf.write(",".join(cols) + "\n")
    pts = grid.y_grid.points
    for xi in range(L):
        xcells = [fmt_float(v) for v in grid.x_grid[xi]]
        for mi in range(len(pts)):
            row = xcells + [fmt_float(pts[mi, 0]), fmt_float(pts[mi, 1]),
                            fmt_float(grid.values[xi, mi])]
            buf.write(",".join(row) + "\n")
    return _write_text(path, buf.getvalue())


def read_density_grid_csv(path) -> DensityGrid:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty grid file")
    header = [c.strip() for c in rows[0]]
    p = sum(1 for c in header if c.startswith("x"))
    want = [f"x{j + 1}" for j in range(p)] + ["y1", "y2", "density"]
    if header != want or p < 1:
        raise ValueError(
            f"{path}: expected a header like x1,…,xp,y1,y2,density, "
            f"got {header}")
    body = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float)
    if body.size == 0:
        raise ValueError(f"{path}: grid file has no data rows")
    xs, ys, dens = body[:, :p], body[:, p:p + 2], body[:, p + 2]

    x_rows: list[np.ndarray] = []
    starts: list[int] = []
    for i in range(len(xs)):
        if not x_rows or not np.array_equal(xs[i], x_rows[-1]):
            x_rows.append(xs[i])
            starts.append(i)
    starts.append(len(xs))
    M = starts[1] - starts[0]
    pts = ys[:M]
    for b in range(len(x_rows)):
        lo, hi = starts[b], starts[b + 1]
        if hi - lo != M or not np.array_equal(ys[lo:hi], pts):
            raise ValueError(
                f"{path}: simplex lattice differs between covariate blocks")
    u = np.unique(pts[:, 0])
    spacing = float(np.diff(u).min()) if len(u) > 1 else 1.0
    y_grid = SimplexGrid(points=pts, spacing=spacing,
                         cell_volume=spacing ** 2, kind="loaded")
    values = dens.reshape(len(x_rows), M)
    return DensityGrid(x_grid=np.stack(x_rows), y_grid=y_grid, values=values)


# ---------------------------------------------------------------------------
# metrics and manifests

_METRIC_KEYS = ("il1", "linf", "lpml", "neg_n_waic")


def write_metrics_json(metrics: dict, path) -> Path:
    unknown = set(metrics) - set(_METRIC_KEYS)
    if unknown:
        raise ValueError(f"unknown metric keys: {sorted(unknown)}")
    payload = {k: (None if metrics.get(k) is None else float(metrics[k]))
               for k in _METRIC_KEYS}
    return _write_text(path, canonical_json(payload) + "\n")


def read_metrics_json(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _versions() -> dict:
    import numpy
    import scipy

    from . import __version__
    vers = {
        "package": __version__,
        "python": ".".join(map(str, sys.version_info[:3])),
        "numpy": numpy.__version__,
        "scipy": scipy.__version__,
    }
    try:
        import numba
        vers["numba"] = numba.__version__
    except ImportError:
        pass
    return vers


def write_manifest(path, command: str, seed, config_digest: str,
                   inputs: dict, output_paths: list,
                   wall_clock_seconds: float) -> Path:
    """Run manifest; lists every written artifact with its content hash.

    Contains wall-clock time, so manifests are exempt from the
    byte-identity contract that every other artifact honors.
    """
    base = Path(path).parent
    outputs = {}
    for op in sorted(Path(p) for p in output_paths):
        try:
            rel = str(op.relative_to(base))
        except ValueError:
            rel = str(op)
        outputs[rel] = sha256_file(op)
    manifest = {
        "command": command,
        "config_digest": config_digest,
        "seed": _py(seed),
        "inputs": {k: str(v) for k, v in sorted(inputs.items())},
        "outputs": outputs,
        "versions": _versions(),
        "wall_clock_seconds": float(wall_clock_seconds),
    }
    return _write_text(path, json.dumps(manifest, sort_keys=True, indent=2)
                       + "\n")
