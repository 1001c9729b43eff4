"""Command-line entry point: run, validate, and list experiments."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .bathsim import StepTooCoarse
from .criticality import NegativeEigenvalue, StepTooLarge, TruncationAuditError
from .experiments import (
    list_experiments,
    load_config,
    run_experiment,
    validate_config,
)
from .lindblad import NonConvergence, PositivityViolation
from .ramsey import NonUnimodal

_NUMERICAL_ERRORS = (
    PositivityViolation,
    NonConvergence,
    NegativeEigenvalue,
    StepTooLarge,
    TruncationAuditError,
    StepTooCoarse,
    NonUnimodal,
    FloatingPointError,
    np.linalg.LinAlgError,
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zenosim", description="Reproducible metrology experiments from JSON configs."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="execute a config and write CSV outputs")
    run_p.add_argument("config", help="path to a JSON experiment config")
    run_p.add_argument("--seed", type=int, default=None, help="override the config seed")
    run_p.add_argument("--workers", type=int, default=None, help="worker processes")
    run_p.add_argument("--output-dir", default=None, help="override the output directory")

    val_p = sub.add_parser("validate", help="check a config without computing")
    val_p.add_argument("config", help="path to a JSON experiment config")

    sub.add_parser("list", help="list available experiments")
    return parser


def _resolve_workers(flag: int | None) -> int | None:
    """CLI flag, then ZENOSIM_WORKERS, then hardware parallelism."""
    if flag is not None:
        return flag
    env = os.environ.get("ZENOSIM_WORKERS")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            print(f"error: ZENOSIM_WORKERS={env!r} is not an integer", file=sys.stderr)
            return None
    return os.cpu_count() or 1


def _load(path: str) -> dict | None:
    try:
        return load_config(path)
    except FileNotFoundError:
        print(f"error: config file not found: {path}", file=sys.stderr)
    except json.JSONDecodeError as exc:
        print(f"error: {path} is not valid JSON: {exc}", file=sys.stderr)
    return None


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)

    if args.command == "list":
        print(list_experiments())
        return 0

    cfg = _load(args.config)
    if cfg is None:
        return 2
    errors, warnings = validate_config(cfg)
    for warn in warnings:
        print(f"warning: {warn}", file=sys.stderr)
    if errors:
        for err in errors:
            print(f"error: {err}", file=sys.stderr)
        return 2

    if args.command == "validate":
        print(f"{args.config}: OK ({cfg['experiment']})")
        return 0

    workers = _resolve_workers(args.workers)
    if workers is None:
        return 2
    if workers < 1:
        print(f"error: workers must be >= 1, got {workers}", file=sys.stderr)
        return 2
    seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    if not 0 <= seed < 2**64:
        print("error: seed must fit in an unsigned 64-bit integer", file=sys.stderr)
        return 2
    output_dir = Path(
        args.output_dir
        if args.output_dir is not None
        else cfg.get("output_dir", "zenosim-out")
    )

    try:
        written, manifest = run_experiment(cfg, output_dir, seed, workers)
    except _NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
