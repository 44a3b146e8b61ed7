"""Command-line interface.

    col run       --config <file> --out <dir> [--set key=value ...]
    col check     --suite <name>
    col sweep     --config <file> --grid key=v1,v2,... --out <dir>
    col summarize --dir <dir>

Exit codes: 0 success, 1 validation error, 2 check failure.
The COL_SEED environment variable overrides the master seed.
"""

from __future__ import annotations

import argparse
import sys

from .core import ProblemError
from .harness import (apply_overrides, load_config, run_experiment,
                      summarize_dir, sweep)
from .suites import SUITES, run_suite


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="col",
                                     description="continuous online learning harness")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment config")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--out", required=True)
    p_run.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a dotted config key")
    p_run.add_argument("--workers", type=int, default=1)

    p_check = sub.add_parser("check", help="run a named property suite")
    p_check.add_argument("--suite", required=True)

    p_sweep = sub.add_parser("sweep", help="grid over one config key")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--grid", required=True, metavar="KEY=V1,V2,...")
    p_sweep.add_argument("--out", required=True)
    p_sweep.add_argument("--workers", type=int, default=1)

    p_sum = sub.add_parser("summarize", help="recompute summaries from traces")
    p_sum.add_argument("--dir", required=True)
    return parser


def _parse_overrides(items):
    out = []
    for item in items:
        if "=" not in item:
            raise ProblemError(f"override {item!r} must be KEY=VALUE")
        key, value = item.split("=", 1)
        out.append((key, value))
    return out


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            cfg = load_config(args.config)
            apply_overrides(cfg, _parse_overrides(args.set))
            traces = run_experiment(cfg, args.out, workers=args.workers)
            print(f"wrote {len(traces)} trace files + summary.csv to {args.out}")
            return 0
        if args.command == "check":
            if args.suite not in SUITES:
                print(f"unknown suite {args.suite!r}; available: "
                      f"{', '.join(sorted(SUITES))}", file=sys.stderr)
                return 1
            report = run_suite(args.suite)
            for line in report.lines():
                print(line)
            return 0 if report.passed else 2
        if args.command == "sweep":
            cfg = load_config(args.config)
            key, _, raw = args.grid.partition("=")
            if not raw:
                raise ProblemError("--grid needs KEY=V1,V2,...")
            values = raw.split(",")
            results = sweep(cfg, key, values, args.out, workers=args.workers)
            print(f"swept {key} over {len(results)} values into {args.out}")
            return 0
        if args.command == "summarize":
            rows = summarize_dir(args.dir)
            for row in rows:
                print(f"{row['trace']}: N={row['n']} "
                      f"dyn={row['dynamic_regret']:.6g} "
                      f"slope={row['slope_last_decade']:.3f}")
            return 0
    except (ProblemError, FileNotFoundError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 1


if __name__ == "__main__":
    sys.exit(main())
