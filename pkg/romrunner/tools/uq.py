"""``rom uq``: bootstrap uncertainty of the predicted subspace over a grid."""

from __future__ import annotations

import argparse
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from core.errors import ConfigError
from core.pgp import PgpModel, load_model, predict, uncertainty_stddev
from core.types.domain import ParameterPoint
from core.types.run_config import RunConfig
from log import app_logger
from tools.common import (
    add_common_flags,
    format_float,
    grid_points,
    load_config,
    run_directory,
    write_rows,
)


def uncertainty_map(
    model: PgpModel,
    thetas: Sequence[ParameterPoint],
    samples: int,
    seed: int,
    threads: int = 1,
) -> list[tuple[ParameterPoint, float, float, bool]]:
    """``(theta, variance_scale, stddev, shrunk)`` per point, in input order.

    Every point draws from its own generator seeded with ``seed``.
    """

    def one(theta: ParameterPoint) -> tuple[ParameterPoint, float, float, bool]:
        dist = predict(model, theta)
        stddev = uncertainty_stddev(dist, model, count=samples, seed=seed)
        return theta, dist.variance_scale, stddev, dist.shrunk

    if threads <= 1:
        return [one(theta) for theta in thetas]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(one, thetas))


def write_uq(cfg: RunConfig, model: PgpModel, path: Path) -> None:
    thetas = grid_points(cfg.uq.grid or cfg.grid)
    rows = uncertainty_map(model, thetas, cfg.uq.samples, cfg.seed, cfg.threads)
    write_rows(
        path,
        [*model.names, "variance_scale", "stddev", "shrunk"],
        (
            [*(format_float(v) for v in theta.values), format_float(c), format_float(s), int(f)]
            for theta, c, s, f in rows
        ),
    )
    app_logger.info(
        "[uq] %d points, max stddev %.4g -> %s",
        len(rows),
        max((row[2] for row in rows), default=0.0),
        path,
    )


def handle(args: argparse.Namespace) -> int:
    cfg = load_config(args)
    if cfg.paths.model is None:
        raise ConfigError("uq needs --model")
    model = load_model(cfg.paths.model)
    directory = run_directory(cfg, "uq", args.out)
    write_uq(cfg, model, directory / "uq.csv")
    return 0


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("uq", help="Bootstrap uncertainty map of a trained model")
    add_common_flags(parser)
    parser.add_argument("--model", type=Path, default=None, help="Model archive directory")
    parser.set_defaults(handler=handle)
