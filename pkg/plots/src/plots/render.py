"""Barycentric contour rendering.

Each covariate slice becomes one PNG: a filled contour plot of the
density over the 2-simplex drawn in barycentric coordinates (corners
part 1 lower-left, part 2 lower-right, part 3 top).  When a reference
grid is supplied the figure carries two panels, reference on the left
and estimate on the right, sharing one contour scale.

Rendering is deterministic: fixed figure geometry, DPI, colormap, and
contour levels derived only from the data (or given explicitly).  The
covariate value appears in the output file name, never inside the
figure, so panels of a covariate-free density stay pixel-comparable
across slices.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)
from matplotlib.tri import Triangulation  # noqa: E402

from .grid_io import DensityGrid, GridSchemaError, read_density_grid

__all__ = ["PlotSpec", "render_contours"]

_SQRT3_2 = np.sqrt(3.0) / 2.0
_CORNERS = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, _SQRT3_2]])
_CMAP = "viridis"
_N_LEVELS = 11


@dataclass
class PlotSpec:
    """What to render: grid file, covariate slices, output directory."""

    grid: Path
    slices: tuple[float, ...]
    out_dir: Path
    truth: Path | None = None       # optional reference grid
    levels: tuple[float, ...] | None = None
    dpi: int = 150

    def __post_init__(self) -> None:
        self.grid = Path(self.grid)
        self.out_dir = Path(self.out_dir)
        self.truth = None if self.truth is None else Path(self.truth)
        self.slices = tuple(float(v) for v in self.slices)
        if not self.slices:
            raise ValueError("need at least one covariate slice")
        if self.levels is not None:
            lv = tuple(float(v) for v in self.levels)
            if len(lv) < 2 or any(b <= a for a, b in zip(lv, lv[1:])):
                raise ValueError(
                    "explicit contour levels must be strictly increasing "
                    "with at least two entries")
            self.levels = lv


def _barycentric_xy(points: np.ndarray) -> np.ndarray:
    full = np.column_stack([points, 1.0 - points.sum(axis=1)])
    return full @ _CORNERS


def _shared_levels(spec: PlotSpec,
                   slice_vals: list[np.ndarray]) -> np.ndarray:
    if spec.levels is not None:
        return np.asarray(spec.levels)
    top = max(float(v.max()) for v in slice_vals)
    if top <= 0.0:
        top = 1.0
    return np.linspace(0.0, top, _N_LEVELS)


def _draw_panel(ax, tri: Triangulation, values: np.ndarray,
                levels: np.ndarray, label: str) -> None:
    ax.tricontourf(tri, values, levels=levels, cmap=_CMAP, extend="max")
    ax.plot([0.0, 1.0, 0.5, 0.0], [0.0, 0.0, _SQRT3_2, 0.0],
            color="black", linewidth=1.0)
    pad = 0.04
    ax.text(-pad, -pad, "part 1", ha="right", va="top", fontsize=9)
    ax.text(1.0 + pad, -pad, "part 2", ha="left", va="top", fontsize=9)
    ax.text(0.5, _SQRT3_2 + pad, "part 3", ha="center", va="bottom",
            fontsize=9)
    ax.set_title(label, fontsize=10)
    ax.set_aspect("equal")
    ax.set_xlim(-0.12, 1.12)
    ax.set_ylim(-0.12, _SQRT3_2 + 0.12)
    ax.set_axis_off()


def _slice_tag(value: float) -> str:
    return repr(value).replace(".", "p").replace("-", "m")


def render_contours(spec: PlotSpec) -> list[Path]:
    """Write one PNG per covariate slice; return the paths in order."""
    est = read_density_grid(spec.grid)
    truth = None
    if spec.truth is not None:
        truth = read_density_grid(spec.truth)
        if not np.array_equal(truth.points, est.points):
            raise GridSchemaError(
                f"{spec.truth}: reference grid uses a different simplex "
                f"lattice than {spec.grid}")

    panels: list[tuple[float, list[np.ndarray]]] = []
    flat: list[np.ndarray] = []
    for v in spec.slices:
        vals = [est.slice_values(v, path=str(spec.grid))]
        if truth is not None:
            vals.insert(0, truth.slice_values(v, path=str(spec.truth)))
        panels.append((v, vals))
        flat.extend(vals)
    levels = _shared_levels(spec, flat)

    tri = Triangulation(*_barycentric_xy(est.points).T)
    spec.out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    n_cols = 1 if truth is None else 2
    for v, vals in panels:
        fig, axes = plt.subplots(
            1, n_cols, figsize=(4.8 * n_cols, 4.4), squeeze=False)
        labels = (["estimate"] if truth is None
                  else ["reference", "estimate"])
        for ax, values, label in zip(axes[0], vals, labels):
            _draw_panel(ax, tri, values, levels, label)
        fig.subplots_adjust(left=0.02, right=0.9, top=0.92, bottom=0.04,
                            wspace=0.08)
        cax = fig.add_axes([0.92, 0.12, 0.02, 0.72])
        fig.colorbar(plt.cm.ScalarMappable(
            norm=plt.Normalize(levels[0], levels[-1]), cmap=_CMAP),
            cax=cax)
        path = spec.out_dir / f"slice_x{_slice_tag(v)}.png"
        fig.savefig(path, dpi=spec.dpi)
        plt.close(fig)
        written.append(path)
    return written
