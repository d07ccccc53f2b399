"""Dataset directories and the numeric text-matrix format.

Matrix files are UTF-8 text: a header line ``rows cols`` followed by one line
per row of space-separated decimals written with 17 significant digits, which
round-trips IEEE doubles exactly. Datasets pair such files with a
``manifest.json`` described by ``DatasetManifest``.
"""

from __future__ import annotations

import json
import logging
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from core.errors import DuplicateParameter, IoFailure, SchemaMismatch
from core.types.domain import DatasetEntry, ParameterPoint, SnapshotMatrix
from core.types.schemas import DatasetManifest, ManifestEntry, SolverConfig

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"


def write_matrix(path: Path, matrix: np.ndarray) -> None:
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    rows, cols = matrix.shape
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"{rows} {cols}\n")
            np.savetxt(fh, matrix, fmt="%.17g", delimiter=" ")
    except OSError as exc:
        raise IoFailure(f"cannot write matrix file {path}: {exc}") from exc


def read_matrix(path: Path) -> np.ndarray:
    """Read a text matrix, checking the body against its ``rows cols`` header."""
    try:
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().split()
            body = np.loadtxt(fh, dtype=float, ndmin=2)
    except FileNotFoundError as exc:
        raise SchemaMismatch(f"matrix file {path} does not exist") from exc
    except ValueError as exc:
        raise SchemaMismatch(f"matrix file {path} does not parse: {exc}") from exc
    except OSError as exc:
        raise IoFailure(f"cannot read matrix file {path}: {exc}") from exc

    if len(header) != 2 or not all(h.isdigit() for h in header):
        raise SchemaMismatch(f"matrix file {path} has malformed header {header}")
    rows, cols = int(header[0]), int(header[1])
    if rows == 0 or cols == 0:
        return np.zeros((rows, cols))
    if body.shape != (rows, cols):
        raise SchemaMismatch(
            f"matrix file {path} declares {rows}x{cols} but holds {body.shape}"
        )
    return body


@dataclass
class Dataset:
    manifest: DatasetManifest
    entries: list[DatasetEntry]
    root: Path

    def split(self, tag: str) -> list[DatasetEntry]:
        return [entry for entry in self.entries if entry.split == tag]

    @property
    def snapshots(self) -> list[SnapshotMatrix]:
        return [entry.snapshot for entry in self.entries]


def write_dataset(
    directory: Path,
    entries: Sequence[DatasetEntry],
    solver: SolverConfig | None = None,
    grid: dict[str, list[float] | list[str]] | None = None,
    center_snapshots: bool = False,
) -> DatasetManifest:
    """Write matrices and ``manifest.json`` into ``directory``.

    Raises:
        DuplicateParameter: If two entries share a parameter point.
        IoFailure: If the directory or a file cannot be written.
    """
    seen: dict[tuple[float, ...], int] = {}
    for index, entry in enumerate(entries):
        key = entry.theta.key()
        if key in seen:
            raise DuplicateParameter(
                f"entries {seen[key]} and {index} share theta {entry.theta.label()}"
            )
        seen[key] = index

    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"cannot create dataset directory {directory}: {exc}") from exc

    manifest_entries: list[ManifestEntry] = []
    for index, entry in enumerate(entries):
        relative = f"snapshot_{index:04d}.txt"
        write_matrix(directory / relative, entry.snapshot.data)
        entry.path = relative
        manifest_entries.append(
            ManifestEntry(
                names=list(entry.theta.names),
                values=list(entry.theta.values),
                path=relative,
                n=entry.snapshot.n,
                n_t=entry.snapshot.n_t,
                split=entry.split,
            )
        )

    manifest = DatasetManifest(
        entries=manifest_entries,
        solver=solver,
        grid=grid or {},
        center_snapshots=center_snapshots,
    )
    try:
        (directory / MANIFEST_NAME).write_text(
            manifest.model_dump_json(indent=2), encoding="utf-8"
        )
    except OSError as exc:
        raise IoFailure(f"cannot write manifest in {directory}: {exc}") from exc
    logger.info("wrote dataset with %d entries to %s", len(entries), directory)
    return manifest


def load_manifest(path: Path) -> DatasetManifest:
    if path.is_dir():
        path = path / MANIFEST_NAME
    try:
        raw = path.read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise SchemaMismatch(f"manifest {path} does not exist") from exc
    except OSError as exc:
        raise IoFailure(f"cannot read manifest {path}: {exc}") from exc
    try:
        return DatasetManifest.model_validate_json(raw)
    except (ValidationError, json.JSONDecodeError) as exc:
        raise SchemaMismatch(f"manifest {path} does not match the schema: {exc}") from exc


def read_dataset(path: Path) -> Dataset:
    """Load a dataset from its directory or ``manifest.json`` path.

    Raises:
        SchemaMismatch: If the manifest is malformed, references a missing or
            unparsable file, or a matrix disagrees with its declared shape.
    """
    root = path if path.is_dir() else path.parent
    manifest = load_manifest(path)

    entries: list[DatasetEntry] = []
    seen: set[tuple[float, ...]] = set()
    for item in manifest.entries:
        theta = ParameterPoint(values=tuple(item.values), names=tuple(item.names))
        if theta.key() in seen:
            raise SchemaMismatch(f"manifest lists theta {theta.label()} twice")
        seen.add(theta.key())
        data = read_matrix(root / item.path)
        if data.shape != (item.n, item.n_t):
            raise SchemaMismatch(
                f"{item.path} is {data.shape}, manifest declares ({item.n}, {item.n_t})"
            )
        entries.append(
            DatasetEntry(
                snapshot=SnapshotMatrix(data=data, theta=theta),
                split=item.split,
                path=item.path,
            )
        )
    return Dataset(manifest=manifest, entries=entries, root=root)
