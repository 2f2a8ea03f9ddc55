#!/usr/bin/env python3
"""Retrieval-time benchmark across database sizes and descriptor sizes.

Times one exhaustive query per cell (median over repetitions, after a
warm-up) on synthetic indices. Absolute milliseconds are machine-specific;
the interesting output is how cost scales along each axis. With query
expansion enabled every retrieval performs two full scans, so double these
numbers for expanded queries.
"""

import argparse
import json
from pathlib import Path

from rsir import benchmark_search


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--sizes", default="50,100,200,300,400,500")
    parser.add_argument("--dims", default="16384,1024,512,256")
    parser.add_argument("--repetitions", type=int, default=51)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", help="directory for timings.txt / timings.json")
    args = parser.parse_args()

    report = benchmark_search(
        [int(v) for v in args.sizes.split(",")],
        [int(v) for v in args.dims.split(",")],
        repetitions=args.repetitions,
        seed=args.seed,
    )
    table = report.format_table()
    print(f"median query time (ms), {args.repetitions} repetitions per cell")
    print(table)
    ratio = report.cells[(report.sizes[-1], max(report.dims))].median_ms / report.cells[
        (report.sizes[-1], min(report.dims))
    ].median_ms
    print(f"largest/smallest dim at size {report.sizes[-1]}: {ratio:.1f}x")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "timings.txt").write_text(table + "\n", encoding="utf-8")
        (out / "timings.json").write_text(json.dumps(report.records(), indent=2) + "\n", encoding="utf-8")


if __name__ == "__main__":
    main()
