"""Command-line interface.

Subcommands: simulate, fit, predict, evaluate, compare, replicate-study.
Every command that writes artifacts also writes a ``manifest.json``
listing each artifact with its sha256, the effective seed, and a digest
of the merged configuration.  All outputs except manifests (which record
wall-clock time) are byte-identical across reruns with the same inputs.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from . import inference, serialization as ser, study
from .config import (ConfigError, NAMED_PRIORS, apply_named_prior,
                     chain_from_config, grid_settings, load_config,
                     pdr_settings, prior_from_config)
from .dirichlet_regression import fit_pdr
from .sampler import run_chain
from .simplex import simplex_grid
from .simulate import Scenario, sample_dataset, true_density_grid

__all__ = ["main"]


def _digest(cfg: dict) -> str:
    return ser.sha256_bytes(ser.canonical_json(cfg).encode("utf-8"))


def _grids(cfg: dict):
    gs = grid_settings(cfg)
    return (inference.default_x_grid(gs["x_points"]),
            simplex_grid(gs["y_spacing"], kind=gs["y_kind"]))


def _read_samples_with_loglik_guard(path):
    samples = ser.read_samples_files(path)
    if samples.n_retained == 0:
        raise ValueError(f"{path}: no retained draws")
    return samples


def _criteria_or_none(samples):
    try:
        lp, _ = inference.lpml(samples)
        return lp, inference.waic(samples)
    except ValueError:
        return None, None


# ---------------------------------------------------------------------------
# subcommands

def _cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    seed = args.seed if args.seed is not None else cfg["chain"]["seed"]
    t0 = time.time()
    data = sample_dataset(args.scenario, args.n, seed)
    out = Path(args.out)
    data_path = ser.write_dataset_csv(data, out / "dataset.csv")
    ser.write_manifest(out / "manifest.json", "simulate", seed, _digest(cfg),
                       {"scenario": Scenario.parse(args.scenario).value,
                        "n": args.n},
                       [data_path], time.time() - t0)
    print(f"wrote {data_path}")
    return 0


def _cmd_fit(args) -> int:
    cfg = load_config(args.config)
    if args.prior is not None:
        if args.model != "dmbpp":
            raise ValueError("--prior selects the spike-and-slab preset and "
                             "only applies to --model dmbpp")
        cfg = apply_named_prior(cfg, args.prior)
    seed = args.seed if args.seed is not None else cfg["chain"]["seed"]
    data = ser.read_dataset_csv(args.data)
    chain_cfg = chain_from_config(cfg, seed=seed)
    t0 = time.time()
    if args.model == "dmbpp":
        prior = prior_from_config(cfg, data.x)
        samples = run_chain(data, prior, chain_cfg)
    else:
        pd = pdr_settings(cfg)
        samples = fit_pdr(data, chain_cfg,
                          prior_variance=pd["prior_variance"],
                          variant=pd["variant"])
    out = Path(args.out)
    paths = ser.write_samples_files(samples, out)
    ser.write_manifest(out / "manifest.json", "fit", seed, _digest(cfg),
                       {"data": args.data, "model": args.model},
                       list(paths.values()), time.time() - t0)
    print(f"wrote {paths['samples']} ({samples.n_retained} retained draws)")
    return 0


def _cmd_predict(args) -> int:
    cfg = load_config(args.config)
    t0 = time.time()
    samples = _read_samples_with_loglik_guard(args.samples)
    x_grid, y_grid = _grids(cfg)
    grid = inference.predictive_density(samples, x_grid, y_grid)
    out = Path(args.out)
    grid_path = ser.write_density_grid_csv(grid, out / "density_grid.csv")
    ser.write_manifest(out / "manifest.json", "predict", None, _digest(cfg),
                       {"samples": args.samples}, [grid_path],
                       time.time() - t0)
    print(f"wrote {grid_path}")
    return 0


def _cmd_evaluate(args) -> int:
    cfg = load_config(args.config)
    if (args.scenario is None) == (args.truth_grid is None):
        raise ValueError("exactly one of --scenario or --truth-grid is required")
    t0 = time.time()
    samples = _read_samples_with_loglik_guard(args.samples)
    if args.truth_grid is not None:
        truth = ser.read_density_grid_csv(args.truth_grid)
        x_grid, y_grid = truth.x_grid, truth.y_grid
    else:
        x_grid, y_grid = _grids(cfg)
        truth = true_density_grid(args.scenario, x_grid, y_grid)
    est = inference.predictive_density(samples, x_grid, y_grid)
    lp, nw = _criteria_or_none(samples)
    metrics = {"il1": inference.integrated_l1(est, truth),
               "linf": inference.l_infinity(est, truth),
               "lpml": lp, "neg_n_waic": nw}
    out = Path(args.out)
    grid_path = ser.write_density_grid_csv(est, out / "density_grid.csv")
    truth_path = ser.write_density_grid_csv(truth, out / "truth_grid.csv")
    metrics_path = ser.write_metrics_json(metrics, out / "metrics.json")
    ser.write_manifest(out / "manifest.json", "evaluate", None, _digest(cfg),
                       {"samples": args.samples,
                        "truth": args.truth_grid or f"scenario {args.scenario}"},
                       [grid_path, truth_path, metrics_path],
                       time.time() - t0)
    print(f"wrote {metrics_path}")
    print(ser.canonical_json(metrics))
    return 0


def _cmd_compare(args) -> int:
    rows = []
    for label, path in (("a", args.samples_a), ("b", args.samples_b)):
        samples = _read_samples_with_loglik_guard(path)
        lp, nw = _criteria_or_none(samples)
        if lp is None:
            raise ValueError(f"{path}: criteria undefined "
                             f"(no finite retained draws)")
        rows.append({"model": samples.meta.get("model", "?"),
                     "label": label, "path": str(path),
                     "lpml": lp, "neg_n_waic": nw})
    rows.sort(key=lambda r: -r["lpml"])
    print("rank,label,model,lpml,neg_n_waic,path")
    lines = []
    for i, r in enumerate(rows, 1):
        line = (f"{i},{r['label']},{r['model']},{ser.fmt_float(r['lpml'])},"
                f"{ser.fmt_float(r['neg_n_waic'])},{r['path']}")
        lines.append(line)
        print(line)
    if args.out:
        out = Path(args.out)
        body = "rank,label,model,lpml,neg_n_waic,path\n" \
            + "\n".join(lines) + "\n"
        out.mkdir(parents=True, exist_ok=True)
        (out / "comparison.csv").write_text(body, encoding="utf-8")
        print(f"wrote {out / 'comparison.csv'}")
    return 0


def _cmd_replicate_study(args) -> int:
    cfg = load_config(args.config)
    cfg = study.apply_scale(cfg, args.scale)
    seed = args.seed if args.seed is not None else cfg["chain"]["seed"]
    t0 = time.time()
    result = study.run_study(cfg, base_seed=seed, out_dir=args.out,
                             jobs=args.jobs)
    ser.write_manifest(Path(args.out) / "manifest.json", "replicate-study",
                       seed, _digest(cfg), {"scale": args.scale},
                       list(result["paths"].values()), time.time() - t0)
    print(f"completed {result['n_tasks'] - result['n_failed']}"
          f"/{result['n_tasks']} replicates")
    for f in result["failures"]:
        print(f"FAILED scenario={f['scenario']} prior={f['prior']} "
              f"n={f['n']} replicate={f['replicate']}: {f['error']}",
              file=sys.stderr)
    for name in ("replicates", "mean_il1", "agreement"):
        print(f"wrote {result['paths'][name]}")
    return 0 if result["n_failed"] == 0 else 3


# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="dmbpp",
        description="Density regression for compositional responses, "
                    "with a simulation-study harness.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, seed=True, config=True, out=True):
        if config:
            p.add_argument("--config", default=None,
                           help="YAML config overriding packaged defaults")
        if seed:
            p.add_argument("--seed", type=int, default=None,
                           help="override the configured seed")
        if out:
            p.add_argument("--out", required=True,
                           help="output directory")

    p = sub.add_parser("simulate", help="draw a synthetic dataset")
    p.add_argument("--scenario", required=True,
                   help="one of I, II, III, IV")
    p.add_argument("--n", type=int, required=True)
    common(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("fit", help="run an MCMC fit")
    p.add_argument("--data", required=True, help="dataset CSV")
    p.add_argument("--model", choices=["dmbpp", "pdr"], default="dmbpp")
    p.add_argument("--prior", choices=sorted(NAMED_PRIORS), default=None,
                   help="named selection-prior preset (dmbpp only)")
    common(p)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("predict", help="tabulate the predictive density")
    p.add_argument("--samples", required=True,
                   help="directory written by 'fit'")
    common(p, seed=False)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("evaluate",
                       help="density metrics and fit criteria")
    p.add_argument("--samples", required=True)
    p.add_argument("--scenario", default=None,
                   help="score against this scenario's true density")
    p.add_argument("--truth-grid", default=None,
                   help="score against a stored density-grid CSV")
    common(p, seed=False)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("compare", help="rank two fits by LPML")
    p.add_argument("--samples-a", required=True)
    p.add_argument("--samples-b", required=True)
    p.add_argument("--out", default=None,
                   help="optional directory for comparison.csv")
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("replicate-study",
                       help="simulation study across scenarios/replicates")
    p.add_argument("--scale", choices=sorted(study.SCALE_PRESETS),
                   default="desk")
    p.add_argument("--jobs", type=int, default=1,
                   help="worker processes")
    common(p)
    p.set_defaults(func=_cmd_replicate_study)

    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
