"""Command line figure renderer for run exports."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .artifacts import SchemaError, load_run
from .plots import FIGURES, render_figures


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="irollan-plot", description=__doc__)
    parser.add_argument("--run", type=Path, required=True, help="run export directory")
    parser.add_argument("--out", type=Path, required=True, help="directory for the rendered figures")
    parser.add_argument(
        "--figures",
        default=",".join(FIGURES),
        help=f"comma-separated subset of {','.join(FIGURES)}",
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    names = [n.strip() for n in args.figures.split(",") if n.strip()]
    try:
        artifacts = load_run(args.run)
        paths = render_figures(artifacts, args.out, names)
    except (SchemaError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for path in paths:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
