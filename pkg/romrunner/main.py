"""rom: POD basis prediction on the Grassmann manifold.

Subcommands simulate snapshot datasets, train projected Gaussian process
models, predict bases at new parameter points, compare predictors, map
predictive uncertainty and run the end-to-end study. Exit codes: 0 success,
2 validation error, 3 numerical failure, 4 IO error.
"""

from __future__ import annotations

import argparse
import sys
from collections.abc import Sequence

import logfire
from pydantic import ValidationError

from config import settings
from core.errors import RomError, ValidationFailure
from log import app_logger
from tools import register_commands


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rom", description="Projected Gaussian process prediction of POD bases"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    register_commands(subparsers)
    return parser


def run(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)

    if settings.logfire_token:
        logfire.configure(
            token=settings.logfire_token,
            service_name="pgp-rom",
            environment=settings.environment,
        )

    try:
        return args.handler(args)
    except RomError as exc:
        app_logger.error("[%s] %s: %s", args.command, type(exc).__name__, exc)
        return exc.exit_code
    except ValidationError as exc:
        app_logger.error("[%s] invalid input: %s", args.command, exc)
        return ValidationFailure.exit_code


if __name__ == "__main__":
    sys.exit(run())
