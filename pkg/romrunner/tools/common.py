"""Helpers shared by the command modules: flags, config, run directories."""

from __future__ import annotations

import argparse
import csv
from collections.abc import Iterable, Sequence
from pathlib import Path
from typing import Any

import numpy as np

from config import settings
from core.dataset import Dataset, read_dataset
from core.errors import ConfigError, IoFailure
from core.pde_lab import build_parameter_grid
from core.pod import select_rank
from core.types.domain import ParameterPoint, SnapshotMatrix
from core.types.run_config import GridSection, RunConfig, load_run_config
from log import app_logger

SPLIT_TOL = 1e-6


def add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, default=None, help="TOML run configuration")
    parser.add_argument("--out", type=Path, default=None, help="Parent of the run directory")
    parser.add_argument("--seed", type=int, default=None, help="Overrides the config seed")
    parser.add_argument(
        "--threads", type=int, default=None, help="Worker threads across parameter points"
    )


def load_config(args: argparse.Namespace) -> RunConfig:
    """Config file values with command-line flags applied on top."""
    overrides: dict[str, Any] = {"seed": args.seed, "threads": args.threads}
    for flag in ("dataset", "model", "thetas"):
        value = getattr(args, flag, None)
        overrides[f"paths.{flag}"] = str(value) if value is not None else None
    return load_run_config(args.config, overrides)


def run_directory(cfg: RunConfig, command: str, out: Path | None) -> Path:
    """Create ``<out>/<command>-<config digest>`` and record the resolved config in it."""
    directory = (out or settings.runs_dir) / f"{command}-{cfg.digest()}"
    ensure_directory(directory)
    try:
        (directory / "config.json").write_text(cfg.model_dump_json(indent=2), encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write config.json in {directory}: {exc}") from exc
    app_logger.info("[%s] run directory %s", command, directory)
    return directory


def grid_points(grid: GridSection) -> list[ParameterPoint]:
    return build_parameter_grid(grid.lo, grid.hi, grid.step, names=grid.names)


def on_lattice(theta: ParameterPoint, lo: Sequence[float], step: Sequence[float]) -> bool:
    """Whether every component sits on ``lo + m * step`` for an integer ``m``."""
    offsets = (theta.as_array() - np.asarray(lo)) / np.asarray(step)
    return bool(np.all(np.abs(offsets - np.round(offsets)) < SPLIT_TOL))


def require_dataset(cfg: RunConfig) -> Dataset:
    if cfg.paths.dataset is None:
        raise ConfigError("this command needs a dataset (--dataset or paths.dataset)")
    return read_dataset(cfg.paths.dataset)


def split_snapshots(dataset: Dataset) -> tuple[list[SnapshotMatrix], list[SnapshotMatrix]]:
    train = [entry.snapshot for entry in dataset.split("train")]
    test = [entry.snapshot for entry in dataset.split("test")]
    if not train:
        raise ConfigError(f"dataset {dataset.root} has no training entries")
    return train, test


def resolve_rank(
    cfg: RunConfig, samples: Sequence[SnapshotMatrix], r: int | None, center: bool
) -> int:
    """An explicit rank, else the rank for ``pod.energy``, else ``pod.r``."""
    if r is not None:
        return r
    if cfg.pod.energy is None:
        return cfg.pod.r
    rank = select_rank(samples, cfg.pod.energy, center=center)
    app_logger.info("[pod] r=%d for energy fraction %g", rank, cfg.pod.energy)
    return rank


def format_float(value: float) -> str:
    return f"{value:.17g}"


def write_rows(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            writer.writerows(rows)
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def ensure_directory(path: Path) -> Path:
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"cannot create directory {path}: {exc}") from exc
    return path
