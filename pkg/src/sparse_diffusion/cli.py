"""Command line entry point: ``sparse-diffusion run|validate <config>``."""

from __future__ import annotations

import argparse
import logging
import sys

from .experiment import OUTPUT_ENV, run_experiment, validate_config


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sparse-diffusion", description="Sparse diffusion LMS experiments")
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run an experiment config")
    run.add_argument("config")
    run.add_argument("--workers", type=int, default=None, help="Monte-Carlo worker processes (overrides config)")
    run.add_argument("--output-dir", default=None, help=f"output directory (overrides config and ${OUTPUT_ENV})")
    run.add_argument("-q", "--quiet", action="store_true")
    val = sub.add_parser("validate", help="check a config without running it")
    val.add_argument("config")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    report = validate_config(args.config, getattr(args, "output_dir", None))
    if args.command == "validate":
        print(report)
        return 0 if report.ok else 2
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    for w in report.warnings:
        logging.warning("warning: %s", w)
    if not report.ok:
        for e in report.errors:
            print(f"error: {e}", file=sys.stderr)
        return 2
    cfg = report.config
    if args.workers is not None:
        if args.workers < 1:
            print("error: --workers must be >= 1", file=sys.stderr)
            return 2
        cfg.workers = args.workers
    result = run_experiment(cfg)
    for f in result.files:
        logging.info("wrote %s", f)
    return 0


if __name__ == "__main__":
    sys.exit(main())
