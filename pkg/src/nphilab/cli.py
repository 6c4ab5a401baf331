"""Command line: ``nphilab run --config <path> [--out <path>] [--format json|csv] [--suite <name>...]``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys

from nphilab.lab import SUITES, ConfigError, LabConfig, emit, run, write_artifacts


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nphilab", description="Numerical checks for quotient modules [z - phi(w)].")
    sub = parser.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run verification suites from a JSON config")
    r.add_argument("--config", required=True, help="path to the JSON config")
    r.add_argument("--out", help="write the report here instead of stdout")
    r.add_argument("--format", choices=("json", "csv"), default="json")
    r.add_argument("--suite", action="extend", nargs="+", choices=SUITES, metavar="NAME",
                   help="run only these suites (repeatable); overrides the config list")
    r.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = LabConfig.from_file(args.config)
    except ConfigError as exc:
        print(json.dumps({"error": "invalid config", "fields": exc.fields}, indent=2, sort_keys=True), file=sys.stderr)
        return 2
    if args.suite:
        cfg = dataclasses.replace(cfg, suites=tuple(args.suite))
    report = run(cfg)
    try:
        text = emit(report, args.format, args.out)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.out is None:
        sys.stdout.write(text)
    if cfg.plot_dir and report.artifacts:
        write_artifacts(report, cfg.plot_dir)
    counts = report.counts()
    print(", ".join(f"{k} {v}" for k, v in counts.items() if v), file=sys.stderr)
    return 1 if report.has_failures else 0


if __name__ == "__main__":
    sys.exit(main())
