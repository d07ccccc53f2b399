"""``rom evaluate``: compare basis predictors on held-out parameter points."""

from __future__ import annotations

import argparse
from collections.abc import Sequence
from pathlib import Path

from core.dataset import Dataset
from core.errors import ConfigError
from core.methods import BasisPredictor, build_predictors
from core.metrics import MetricReport, compare_methods, loocv
from core.pgp import PgpModel
from core.types.domain import SnapshotMatrix
from core.types.run_config import RunConfig
from log import app_logger
from tools.common import (
    add_common_flags,
    ensure_directory,
    load_config,
    require_dataset,
    run_directory,
    resolve_rank,
    split_snapshots,
)


def evaluate_dataset(
    cfg: RunConfig,
    dataset: Dataset,
    directory: Path,
    r: int | None = None,
    pgp_model: PgpModel | None = None,
) -> MetricReport:
    """Run the configured protocol and write ``report.csv`` and ``summary.json``."""
    center = cfg.pod.center or dataset.manifest.center_snapshots
    methods = cfg.evaluation.methods

    if cfg.evaluation.protocol == "holdout":
        train, test = split_snapshots(dataset)
        rank = resolve_rank(cfg, train, r, center)
        if not test:
            raise ConfigError(f"dataset {dataset.root} has no test entries")
        predictors = build_predictors(
            train,
            rank,
            methods,
            cfg.pgp,
            cfg.interp,
            seed=cfg.seed,
            center=center,
            oracle_pool=test,
            pgp_model=pgp_model,
        )
        report = compare_methods(test, predictors, rank)
    else:
        samples = dataset.snapshots
        rank = resolve_rank(cfg, samples, r, center)

        def build(fold: Sequence[SnapshotMatrix]) -> list[BasisPredictor]:
            return build_predictors(
                fold,
                rank,
                methods,
                cfg.pgp,
                cfg.interp,
                seed=cfg.seed,
                center=center,
                oracle_pool=samples,
            )

        report = loocv(samples, build, rank)

    ensure_directory(directory)
    report.write_csv(directory / "report.csv")
    report.write_summary(directory / "summary.json")
    for wins in report.wins():
        app_logger.info(
            "[evaluate] %s: %s %d / %s %d / ties %d",
            wins.metric,
            wins.method_a,
            wins.wins_a,
            wins.method_b,
            wins.wins_b,
            wins.ties,
        )
    return report


def handle(args: argparse.Namespace) -> int:
    cfg = load_config(args)
    dataset = require_dataset(cfg)
    directory = run_directory(cfg, "evaluate", args.out)
    evaluate_dataset(cfg, dataset, directory)
    return 0


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("evaluate", help="Compare pGP against the baselines")
    add_common_flags(parser)
    parser.add_argument("--dataset", type=Path, default=None, help="Dataset directory")
    parser.set_defaults(handler=handle)
