"""``rom predict``: MAP bases and coordinates at a batch of parameter points."""

from __future__ import annotations

import argparse
import json
from pathlib import Path

from pydantic import ValidationError

from core.dataset import write_matrix
from core.errors import ConfigError, IoFailure, SchemaMismatch
from core.pgp import load_model, predict
from core.types.domain import ParameterPoint
from core.types.schemas import PredictionBatch, PredictionRecord, ThetaBatch
from log import app_logger
from tools.common import add_common_flags, load_config, run_directory


def read_theta_batch(path: Path) -> list[ParameterPoint]:
    """Parse a ``{"names": [...], "values": [[...], ...]}`` file.

    Raises:
        SchemaMismatch: If the file is not valid JSON or does not match the schema.
    """
    try:
        raw = path.read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise IoFailure(f"theta file {path} does not exist") from exc
    try:
        batch = ThetaBatch.model_validate_json(raw)
    except (ValidationError, json.JSONDecodeError) as exc:
        raise SchemaMismatch(f"theta file {path} does not match the schema: {exc}") from exc
    return [ParameterPoint(values=tuple(row), names=tuple(batch.names)) for row in batch.values]


def handle(args: argparse.Namespace) -> int:
    cfg = load_config(args)
    if cfg.paths.model is None or cfg.paths.thetas is None:
        raise ConfigError("predict needs --model and --thetas")
    model = load_model(cfg.paths.model)
    thetas = read_theta_batch(cfg.paths.thetas)
    directory = run_directory(cfg, "predict", args.out)

    records: list[PredictionRecord] = []
    for index, theta in enumerate(thetas):
        dist = predict(model, theta)
        basis_file, coords_file = f"basis_{index:04d}.txt", f"coords_{index:04d}.txt"
        write_matrix(directory / basis_file, dist.map_subspace.matrix)
        write_matrix(directory / coords_file, dist.mean_coords[:, None])
        records.append(
            PredictionRecord(
                theta=theta.as_dict(),
                basis_file=basis_file,
                coords_file=coords_file,
                shrunk=dist.shrunk,
                variance_scale=dist.variance_scale,
                coords_norm=dist.raw_norm,
            )
        )
    batch = PredictionBatch(model_path=str(cfg.paths.model), records=records)
    try:
        (directory / "predictions.json").write_text(
            batch.model_dump_json(indent=2), encoding="utf-8"
        )
    except OSError as exc:
        raise IoFailure(f"cannot write predictions in {directory}: {exc}") from exc
    app_logger.info(
        "[predict] %d predictions (%d shrunk) -> %s",
        len(records),
        sum(record.shrunk for record in records),
        directory,
    )
    return 0


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("predict", help="Predict bases at new parameter points")
    add_common_flags(parser)
    parser.add_argument("--model", type=Path, default=None, help="Model archive directory")
    parser.add_argument("--thetas", type=Path, default=None, help="JSON batch of thetas")
    parser.set_defaults(handler=handle)
