"""``rom train``: fit a pGP model on the training split of a dataset."""

from __future__ import annotations

import argparse
from pathlib import Path

from core.methods import train_pgp
from core.pgp import PgpModel, save_model
from core.types.run_config import RunConfig
from log import app_logger
from tools.common import (
    add_common_flags,
    load_config,
    require_dataset,
    run_directory,
    resolve_rank,
    split_snapshots,
)


def train_model(cfg: RunConfig, directory: Path, r: int | None = None) -> PgpModel:
    """Train on the dataset's ``train`` entries and archive the model in ``directory``."""
    dataset = require_dataset(cfg)
    train, _ = split_snapshots(dataset)
    center = cfg.pod.center or dataset.manifest.center_snapshots
    rank = resolve_rank(cfg, train, r, center)
    model = train_pgp(train, rank, cfg.pgp, cfg.seed, center)
    save_model(model, directory, seed=cfg.seed)
    app_logger.info(
        "[train] k=%d r=%d kernel xi=%s sigma_K=%.6g -> %s",
        model.k,
        model.r,
        model.kernel.xi,
        model.sigma_k,
        directory,
    )
    return model


def handle(args: argparse.Namespace) -> int:
    cfg = load_config(args)
    directory = run_directory(cfg, "train", args.out)
    train_model(cfg, directory / "model")
    return 0


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("train", help="Train a pGP model on a dataset")
    add_common_flags(parser)
    parser.add_argument("--dataset", type=Path, default=None, help="Dataset directory")
    parser.set_defaults(handler=handle)
