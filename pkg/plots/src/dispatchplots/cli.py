"""Command line: render one chart kind from a results CSV."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from dispatchplots import charts
from dispatchplots.reader import ResultsError, read_results

KINDS = {
    "table2": charts.setup_bars,
    "size-sweep": charts.size_sweep_lines,
    "scal-energy": charts.scalability_energy_lines,
    "param-growth": charts.parameter_growth_lines,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dispatch-plot",
        description="Render benchmark result CSVs to charts.")
    parser.add_argument("kind", choices=sorted(KINDS),
                        help="which view to render")
    parser.add_argument("--csv", required=True, help="results CSV to read")
    parser.add_argument("--out", required=True,
                        help="image path; format follows the extension")
    parser.add_argument("--dpi", type=int, default=150)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        rows = read_results(args.csv)
        fig = KINDS[args.kind](rows)
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(out, dpi=args.dpi)
    except ResultsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote: {out}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
