"""Command line front end: render contour panels from a density-grid CSV."""

from __future__ import annotations

import argparse
import sys

from .grid_io import GridSchemaError
from .render import PlotSpec, render_contours

__all__ = ["main"]


def _parse_slices(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(tok) for tok in text.split(",") if tok.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(
            f"could not parse {text!r} as comma-separated numbers")


def _parse_levels(text: str) -> tuple[float, ...]:
    return _parse_slices(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="render-contours",
        description="Render barycentric contour panels, one per "
                    "covariate slice, from a density-grid CSV.")
    parser.add_argument("--grid", required=True,
                        help="density-grid CSV to plot")
    parser.add_argument("--slices", required=True, type=_parse_slices,
                        help="comma-separated covariate values, e.g. "
                             "0.25,0.5,0.75")
    parser.add_argument("--out", required=True,
                        help="directory for the PNG panels")
    parser.add_argument("--truth", default=None,
                        help="optional reference grid drawn beside the "
                             "estimate")
    parser.add_argument("--levels", default=None, type=_parse_levels,
                        help="explicit contour levels (comma-separated, "
                             "increasing); default spans the plotted data")
    parser.add_argument("--dpi", default=150, type=int)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = PlotSpec(grid=args.grid, slices=args.slices,
                        out_dir=args.out, truth=args.truth,
                        levels=args.levels, dpi=args.dpi)
        written = render_contours(spec)
    except (GridSchemaError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
