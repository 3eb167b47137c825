"""Command-line entry point.

    rugocell solve --config run.toml [--out DIR] [--format json|csv|both]
                   [--dump-fields] [--sweep 0.5,1,2]

Exit codes: 0 success, 2 config parse/validation error, 3 solver or
quadrature failure.  The environment variable RUGOCELL_HEAT_THREADS sets
how many temperature cell solves run concurrently (default 1).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .config import load_config
from .errors import ParseError, RugocellError, ValidationError
from .heat_cell import THREAD_ENV_VAR
from .report import emit, run_from_config, sweep


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rugocell",
        description="Effective coefficients and macroscopic profiles for "
                    "thin-film thermomicropolar flow over a periodically "
                    "rough wall.",
        epilog=f"Environment: {THREAD_ENV_VAR} sets the number of "
               "concurrent temperature cell solves (default 1).")
    sub = parser.add_subparsers(dest="command", required=True)
    solve = sub.add_parser(
        "solve", help="run the model described by a TOML config",
        epilog=f"Environment: {THREAD_ENV_VAR} sets the number of "
               "concurrent temperature cell solves (default 1).")
    solve.add_argument("--config", required=True, metavar="PATH",
                       help="TOML configuration file")
    solve.add_argument("--out", metavar="DIR", default=None,
                       help="output directory (overrides output.directory)")
    solve.add_argument("--format", choices=("json", "csv", "both"),
                       default=None,
                       help="output formats (overrides output.formats)")
    solve.add_argument("--dump-fields", action="store_true",
                       help="also write per-cell grid field files")
    solve.add_argument("--sweep", metavar="L1,L2,...", default=None,
                       help="comma-separated positive aspect values; adds a "
                            "coefficient sweep table (a closed-form lambda=0 "
                            "row is always appended)")
    return parser


def _parse_sweep(text: str) -> list:
    values = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        try:
            v = float(tok)
        except ValueError:
            raise ValidationError([f"--sweep: not a number: {tok!r}"])
        if not v > 0 or v != v or v == float("inf"):
            raise ValidationError([f"--sweep values must be positive finite, got {tok}"])
        values.append(v)
    return values


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.format is not None:
            formats = ("json", "csv") if args.format == "both" else (args.format,)
            cfg.output = replace(cfg.output, formats=formats)
        if args.dump_fields:
            cfg.output = replace(cfg.output, dump_fields=True)
        sweep_values = _parse_sweep(args.sweep) if args.sweep is not None else None
    except (ParseError, ValidationError) as exc:
        print(f"rugocell: config error: {exc}", file=sys.stderr)
        return 2

    try:
        report = run_from_config(cfg)
        sweep_rows = sweep(cfg, sweep_values) if sweep_values is not None else None
        written = emit(report, cfg, out_dir=args.out, sweep_rows=sweep_rows)
    except RugocellError as exc:
        print(f"rugocell: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3

    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
