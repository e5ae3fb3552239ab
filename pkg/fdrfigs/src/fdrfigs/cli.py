"""Command line entry point: render report CSVs to figure files."""

from __future__ import annotations

import argparse
import os
import sys

from .plots import DEFAULT_DPI, METRICS, render_report
from .report import load_report


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fdrfigs",
        description="Render figures from streamfdr report CSVs.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    render = sub.add_parser(
        "render", help="render the figure set for one report CSV"
    )
    render.add_argument("report", help="path to a report CSV")
    render.add_argument(
        "--out-dir", default=".", help="directory for the image files"
    )
    render.add_argument(
        "--dpi", type=int, default=DEFAULT_DPI,
        help=f"raster resolution (default {DEFAULT_DPI})",
    )
    render.add_argument(
        "--metrics", default=None,
        help="comma-separated subset of " + ",".join(sorted(METRICS)),
    )
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        table = load_report(args.report)
        os.makedirs(args.out_dir, exist_ok=True)
        metrics = args.metrics.split(",") if args.metrics else None
        written = render_report(
            table, args.out_dir, dpi=args.dpi, metrics=metrics
        )
        for path in written:
            print(path)
        return 0
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
