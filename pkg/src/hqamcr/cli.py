"""Command-line entry point.

Exit codes: 0 success, 1 configuration error, 2 solver non-convergence.
"""
import argparse
import logging
import sys

from .config import ConfigError, load_config
from .experiment import format_csv, format_trace_csv, run_experiment
from .power import NonConvergenceError

__all__ = ["main", "EXIT_OK", "EXIT_CONFIG", "EXIT_NONCONVERGENCE"]

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NONCONVERGENCE = 2


def _parser():
    p = argparse.ArgumentParser(
        prog="hqamcr",
        description="Run a power-control / error-rate sweep and write the results as CSV.",
    )
    p.add_argument("config", help="YAML experiment configuration")
    p.add_argument("-o", "--output", help="CSV output path (default: 'output' in the config, else stdout)")
    p.add_argument("-j", "--workers", type=int, default=1, help="worker processes (default 1)")
    p.add_argument("-v", "--verbose", action="count", default=0, help="-v for progress, -vv for debug")
    p.add_argument("--emit-dual-trace", metavar="PATH",
                   help="write the dual-iteration trace (multipliers and residuals) to PATH")
    return p


def main(argv=None):
    args = _parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    if args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config)
    except OSError as exc:
        print(f"error: cannot read {args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        rows, trace = run_experiment(cfg, workers=args.workers)
    except NonConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if args.emit_dual_trace and exc.trace:
            with open(args.emit_dual_trace, "w", encoding="utf-8") as fh:
                fh.write(format_trace_csv([dict(sweep_value="", constraint="", inner="", **t.__dict__)
                                           for t in exc.trace]))
        return EXIT_NONCONVERGENCE
    text = format_csv(rows)
    out = args.output or cfg.output
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.emit_dual_trace:
        with open(args.emit_dual_trace, "w", encoding="utf-8") as fh:
            fh.write(format_trace_csv(trace))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
