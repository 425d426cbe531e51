"""Command line: one figure per invocation.

Exit codes: 0 rendered, 1 bad input (unreadable file, unknown kind, bad
output path), 2 missing column (the message names it).
"""

import argparse
import sys

from . import figures, io


def build_parser():
    ap = argparse.ArgumentParser(
        prog="aircrn-plots",
        description="Render one figure from optimizer result files")
    ap.add_argument("inputs", nargs="+",
                    help="result files (trajectory.csv, summary.json, "
                         "convergence.csv, rates.csv, tradeoff.csv)")
    ap.add_argument("--kind", required=True, choices=figures.FIGURE_KINDS)
    ap.add_argument("--out", required=True, help="output image (.png/.svg)")
    ap.add_argument("--deterministic", action="store_true",
                    help="strip writer metadata so reruns are byte-identical")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = figures.FigureSpec(inputs=tuple(args.inputs), kind=args.kind,
                              out=args.out)
    try:
        figures.render(spec, deterministic=args.deterministic)
    except io.MissingColumnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def console_main():
    raise SystemExit(main())


if __name__ == "__main__":
    console_main()
