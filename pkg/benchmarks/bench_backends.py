"""Time the numba and numpy kernel backends on the same workload.

Runs one short Gibbs chain plus one predictive-grid evaluation per
backend and reports wall time and the speed ratio.  The numba pass does
a tiny warm-up chain first so JIT compilation (or on-disk cache load)
is not billed to the measured run.

Usage:
    python benchmarks/bench_backends.py [--n 250] [--iters 600] [--seed 7]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from dmbpp import kernels
from dmbpp.inference import default_y_grid, predictive_density
from dmbpp.model import PriorConfig
from dmbpp.sampler import ChainConfig, run_chain
from dmbpp.simulate import sample_dataset


def time_backend(name: str, data, prior, cfg: ChainConfig,
                 x_grid: np.ndarray, y_grid) -> dict:
    kernels.set_backend(name)
    if name == "numba":
        warm = ChainConfig(n_iter=25, burn_in=5, thin=1, seed=cfg.seed)
        run_chain(data, prior, warm)

    t0 = time.perf_counter()
    samples = run_chain(data, prior, cfg)
    t_chain = time.perf_counter() - t0

    t0 = time.perf_counter()
    predictive_density(samples, x_grid, y_grid)
    t_grid = time.perf_counter() - t0

    return {"backend": name, "chain_s": t_chain, "grid_s": t_grid,
            "retained": len(samples.states)}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--n", type=int, default=250,
                        help="observations in the synthetic dataset")
    parser.add_argument("--iters", type=int, default=600,
                        help="total sweeps per timed chain")
    parser.add_argument("--burn", type=int, default=100)
    parser.add_argument("--scenario", default="I")
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--spacing", type=float, default=0.05,
                        help="simplex lattice spacing for the grid pass")
    args = parser.parse_args(argv)

    data = sample_dataset(args.scenario, args.n, args.seed)
    prior = PriorConfig.from_design(data.x)
    cfg = ChainConfig(n_iter=args.iters, burn_in=args.burn, thin=5,
                      seed=args.seed)
    x_grid = np.array([[0.25], [0.5], [0.75]])
    y_grid = default_y_grid(args.spacing)

    rows = [time_backend(name, data, prior, cfg, x_grid, y_grid)
            for name in ("numba", "numpy")]

    print(f"\nn={args.n} iters={args.iters} grid="
          f"{len(x_grid)}x{len(y_grid.points)} seed={args.seed}")
    print(f"{'backend':<8} {'chain (s)':>10} {'grid (s)':>10} {'kept':>6}")
    for r in rows:
        print(f"{r['backend']:<8} {r['chain_s']:>10.2f} "
              f"{r['grid_s']:>10.2f} {r['retained']:>6}")
    ratio = rows[1]["chain_s"] / max(rows[0]["chain_s"], 1e-9)
    print(f"\nnumpy/numba chain-time ratio: {ratio:.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
