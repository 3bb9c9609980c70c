"""Standalone reader for the density-grid CSV format."""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

__all__ = ["GridSchemaError", "DensityGrid", "read_density_grid"]


class GridSchemaError(ValueError):
    """The file does not conform to the density-grid CSV schema."""


class DensityGrid:
    """Covariate rows, shared simplex lattice, and a (L, M) value table."""

    def __init__(self, x_rows: np.ndarray, points: np.ndarray,
                 values: np.ndarray):
        self.x_rows = x_rows        # (L, p)
        self.points = points        # (M, 2) free simplex coordinates
        self.values = values        # (L, M) densities

    def slice_values(self, x_value: float, *, path="grid") -> np.ndarray:
        """Densities at the covariate slice equal to x_value.

        Only single-predictor grids can be sliced by a scalar; the value
        must match a grid row exactly (grid files store shortest
        round-trip decimals, so values read back compare equal).
        """
        if self.x_rows.shape[1] != 1:
            raise GridSchemaError(
                f"{path}: slicing by a scalar needs a single-predictor "
                f"grid, this one has {self.x_rows.shape[1]}")
        hits = np.flatnonzero(self.x_rows[:, 0] == float(x_value))
        if len(hits) == 0:
            avail = ", ".join(repr(v) for v in self.x_rows[:, 0].tolist())
            raise GridSchemaError(
                f"{path}: slice x={x_value!r} not present in the grid; "
                f"available slices: {avail}")
        return self.values[hits[0]]


def read_density_grid(path) -> DensityGrid:
    """Parse a density-grid CSV; raise GridSchemaError on any deviation."""
    path = Path(path)
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise GridSchemaError(f"{path}: empty file")
    header = [c.strip() for c in rows[0]]
    p = sum(1 for c in header if c.startswith("x"))
    want = [f"x{j + 1}" for j in range(p)] + ["y1", "y2", "density"]
    if p < 1 or header != want:
        raise GridSchemaError(
            f"{path}: expected header x1,…,xp,y1,y2,density, got {header}")
    if len(rows) == 1:
        raise GridSchemaError(f"{path}: no data rows")
    if any(len(r) != p + 3 for r in rows[1:]):
        raise GridSchemaError(
            f"{path}: rows must have {p + 3} columns to match the header")
    try:
        body = np.array([[float(v) for v in r] for r in rows[1:]],
                        dtype=float)
    except ValueError as exc:
        raise GridSchemaError(f"{path}: non-numeric cell ({exc})") from None
    xs, ys, dens = body[:, :p], body[:, p:p + 2], body[:, p + 2]
    if not np.all(np.isfinite(body)):
        raise GridSchemaError(f"{path}: non-finite values")

    x_rows, starts = [], []
    for i in range(len(xs)):
        if not x_rows or not np.array_equal(xs[i], x_rows[-1]):
            x_rows.append(xs[i])
            starts.append(i)
    starts.append(len(xs))
    M = starts[1] - starts[0]
    points = ys[:M]
    for b in range(len(x_rows)):
        lo, hi = starts[b], starts[b + 1]
        if hi - lo != M or not np.array_equal(ys[lo:hi], points):
            raise GridSchemaError(
                f"{path}: covariate blocks carry different simplex "
                f"lattices")
    if np.any(points.sum(axis=1) > 1.0 + 1e-12) or np.any(points < 0):
        raise GridSchemaError(f"{path}: lattice points outside the simplex")
    return DensityGrid(x_rows=np.stack(x_rows), points=points,
                       values=dens.reshape(len(x_rows), M))
