"""Command line front end: flags to a PlotSpec, then render it."""

from __future__ import annotations

import argparse
import os
import sys

from .render import PlotSpec, render


def _parse_series(entry: str) -> tuple[str, str]:
    label, sep, path = entry.partition("=")
    if not sep or not label.strip() or not path.strip():
        raise ValueError(f'series must look like "mode=estimates.csv", got {entry!r}')
    return label.strip(), path.strip()


def _parse_zoom(entry: str) -> tuple[float, float]:
    left, sep, right = entry.partition(":")
    if not sep:
        raise ValueError(f'zoom must look like "t0:t1", got {entry!r}')
    try:
        return float(left), float(right)
    except ValueError:
        raise ValueError(f"zoom endpoints must be numbers, got {entry!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plotview",
        description="Render a two-panel truth/estimate overlay from sideslip CSV files.",
    )
    parser.add_argument("--truth", required=True, help="telemetry CSV with beta_gt on every row")
    parser.add_argument("--series", action="append", default=[], metavar="LABEL=CSV",
                        help="estimate CSV to overlay; repeatable")
    parser.add_argument("--out", required=True, help="output image path (PNG)")
    parser.add_argument("--zoom", metavar="T0:T1",
                        help="restrict the view to a time range inside the data extent")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(sys.argv[1:] if argv is None else list(argv))
    try:
        spec = PlotSpec(
            truth_path=args.truth,
            out_path=args.out,
            series=tuple(_parse_series(entry) for entry in args.series),
            zoom=_parse_zoom(args.zoom) if args.zoom else None,
        )
        path = render(spec)
        if not (os.path.exists(path) and os.path.getsize(path) > 0):
            raise RuntimeError(f"{path}: render produced no image")
    except (ValueError, RuntimeError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
