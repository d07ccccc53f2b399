"""In-memory domain types shared across the numerical core."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, TypeAlias

import numpy as np

from core.errors import DimensionMismatch, SchemaMismatch

SplitTag: TypeAlias = Literal["train", "test"]


@dataclass(frozen=True)
class ParameterPoint:
    """A point theta in the parameter space, with one label per component."""

    values: tuple[float, ...]
    names: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))
        object.__setattr__(self, "names", tuple(str(n) for n in self.names))
        if len(self.values) < 1:
            raise DimensionMismatch("a parameter point needs at least one component")
        if len(self.values) != len(self.names):
            raise DimensionMismatch(
                f"{len(self.values)} values but {len(self.names)} names"
            )
        if not all(math.isfinite(v) for v in self.values):
            raise SchemaMismatch(f"non-finite parameter values {self.values}")

    @property
    def dim(self) -> int:
        return len(self.values)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.names, self.values))

    def key(self) -> tuple[float, ...]:
        """Rounded values used to detect duplicate parameter points."""
        return tuple(round(v, 12) for v in self.values)

    def label(self) -> str:
        return ";".join(f"{n}={float(v)!r}" for n, v in zip(self.names, self.values))


@dataclass(frozen=True, eq=False)
class SnapshotMatrix:
    """n x n_T matrix of field values; column k is the flattened field at t_k."""

    data: np.ndarray
    theta: ParameterPoint

    def __post_init__(self) -> None:
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2:
            raise DimensionMismatch(f"snapshot matrix must be 2-D, got {data.ndim}-D")
        if not np.all(np.isfinite(data)):
            raise SchemaMismatch(f"snapshot matrix for {self.theta.label()} has NaN/Inf")
        object.__setattr__(self, "data", data)

    @property
    def n(self) -> int:
        return self.data.shape[0]

    @property
    def n_t(self) -> int:
        return self.data.shape[1]


@dataclass
class DatasetEntry:
    snapshot: SnapshotMatrix
    split: SplitTag = "train"
    path: str = field(default="")

    @property
    def theta(self) -> ParameterPoint:
        return self.snapshot.theta
