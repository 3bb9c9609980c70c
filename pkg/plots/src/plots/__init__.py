"""Ternary contour figures from density-grid CSV files.

The grid CSV schema (header ``x1,…,xp,y1,y2,density``, covariate-major
rows, one simplex lattice shared by every covariate block) is the only
coupling to the tool that produced the grid; this package reads the file
format and nothing else.
"""

from .grid_io import GridSchemaError, read_density_grid
from .render import PlotSpec, render_contours

__all__ = [
    "GridSchemaError",
    "PlotSpec",
    "read_density_grid",
    "render_contours",
]

__version__ = "0.1.0"
