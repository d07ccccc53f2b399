"""``rom simulate``: snapshot datasets over a parameter grid."""

from __future__ import annotations

import argparse
from pathlib import Path

from core.dataset import write_dataset
from core.errors import ConfigError
from core.pde_lab import simulate_grid
from core.types.domain import DatasetEntry
from core.types.run_config import RunConfig
from core.types.schemas import DatasetManifest
from log import app_logger
from tools.common import add_common_flags, grid_points, load_config, on_lattice, run_directory


def simulate_dataset(cfg: RunConfig, directory: Path) -> DatasetManifest:
    """Simulate every grid point and tag points on the training lattice as ``train``."""
    thetas = grid_points(cfg.grid)
    train_step = cfg.split.train_step
    if train_step and len(train_step) != len(cfg.grid.names):
        raise ConfigError(
            f"split.train_step has {len(train_step)} entries for {len(cfg.grid.names)} axes"
        )
    app_logger.info(
        "[simulate] %d parameter points on a %dx%d grid, %d threads",
        len(thetas),
        cfg.solver.nx,
        cfg.solver.ny,
        cfg.threads,
    )
    snapshots = simulate_grid(thetas, cfg.solver, cfg.threads)
    entries = [
        DatasetEntry(
            snapshot=snapshot,
            split="train"
            if not train_step or on_lattice(snapshot.theta, cfg.grid.lo, train_step)
            else "test",
        )
        for snapshot in snapshots
    ]
    manifest = write_dataset(
        directory,
        entries,
        solver=cfg.solver,
        grid=cfg.grid.model_dump(),
        center_snapshots=cfg.pod.center,
    )
    n_train = sum(entry.split == "train" for entry in entries)
    app_logger.info(
        "[simulate] wrote %d entries (%d train, %d test) to %s",
        len(entries),
        n_train,
        len(entries) - n_train,
        directory,
    )
    return manifest


def handle(args: argparse.Namespace) -> int:
    cfg = load_config(args)
    directory = run_directory(cfg, "simulate", args.out)
    simulate_dataset(cfg, directory / "dataset")
    return 0


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("simulate", help="Simulate snapshot matrices over a grid")
    add_common_flags(parser)
    parser.set_defaults(handler=handle)
