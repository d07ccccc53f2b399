"""Truncated POD bases from snapshot matrices."""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from core.errors import DegenerateData, DimensionMismatch, RankTooLarge
from core.types.domain import SnapshotMatrix

logger = logging.getLogger(__name__)

ORTHONORMALITY_TOL = 1e-10


def canonicalize_signs(matrix: np.ndarray) -> np.ndarray:
    """Flip columns so each column's largest-magnitude entry is positive.

    Ties resolve to the lowest row index (``np.argmax`` semantics).
    """
    matrix = np.array(matrix, dtype=float, copy=True)
    if matrix.size == 0:
        return matrix
    pivots = np.argmax(np.abs(matrix), axis=0)
    signs = np.where(matrix[pivots, np.arange(matrix.shape[1])] < 0, -1.0, 1.0)
    return matrix * signs


@dataclass(frozen=True, eq=False)
class StiefelBasis:
    """``n x r`` matrix with orthonormal columns, ``2r <= n``."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        matrix = np.asarray(self.matrix, dtype=float)
        if matrix.ndim != 2:
            raise DimensionMismatch(f"basis must be 2-D, got shape {matrix.shape}")
        n, r = matrix.shape
        if r < 1 or 2 * r > n:
            raise RankTooLarge(f"basis needs 1 <= r and 2r <= n, got n={n}, r={r}")
        defect = np.linalg.norm(matrix.T @ matrix - np.eye(r))
        if defect > ORTHONORMALITY_TOL:
            raise DimensionMismatch(f"basis columns are not orthonormal (defect {defect:.2e})")
        object.__setattr__(self, "matrix", matrix)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def r(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True, eq=False)
class PodResult:
    basis: StiefelBasis
    singular_values: np.ndarray
    energy_fraction: float

    @property
    def tail_energy(self) -> float:
        """Sum of the discarded squared singular values (the optimal e_F)."""
        return float(np.sum(self.singular_values[self.basis.r :] ** 2))


def _as_array(snapshots: SnapshotMatrix | np.ndarray) -> np.ndarray:
    if isinstance(snapshots, SnapshotMatrix):
        return snapshots.data
    return np.asarray(snapshots, dtype=float)


def compute_pod(
    snapshots: SnapshotMatrix | np.ndarray, r: int, center: bool = False
) -> PodResult:
    """Leading ``r`` left singular vectors of the snapshot matrix.

    Raises:
        RankTooLarge: If ``r`` is outside ``[1, min(n, n_T)]`` or ``2r > n``.
        DegenerateData: If the matrix is identically zero.
    """
    data = _as_array(snapshots)
    n, n_t = data.shape
    if r < 1 or r > min(n, n_t) or 2 * r > n:
        raise RankTooLarge(f"rank r={r} invalid for a {n}x{n_t} snapshot matrix")
    if center:
        data = data - data.mean(axis=1, keepdims=True)
    if not np.any(data):
        raise DegenerateData("snapshot matrix is identically zero")

    u, s, _ = linalg.svd(data, full_matrices=False, lapack_driver="gesdd")
    total = float(np.sum(s**2))
    energy = float(np.sum(s[:r] ** 2) / total) if total > 0 else 0.0
    return PodResult(
        basis=StiefelBasis(canonicalize_signs(u[:, :r])),
        singular_values=s,
        energy_fraction=energy,
    )


def compute_global_pod(
    dataset: Sequence[SnapshotMatrix | np.ndarray], r: int, center: bool = False
) -> PodResult:
    """POD of all snapshot matrices concatenated column-wise.

    Raises:
        DimensionMismatch: If the matrices do not share ``n``.
    """
    if not dataset:
        raise DimensionMismatch("global POD needs at least one snapshot matrix")
    arrays = [_as_array(item) for item in dataset]
    sizes = {a.shape[0] for a in arrays}
    if len(sizes) != 1:
        raise DimensionMismatch(f"snapshot matrices disagree on n: {sorted(sizes)}")
    return compute_pod(np.hstack(arrays), r, center=center)


def rank_for_energy(singular_values: np.ndarray, fraction: float) -> int:
    """Smallest r whose leading modes capture ``fraction`` of the energy."""
    if not 0 < fraction <= 1:
        raise ValueError(f"energy fraction must lie in (0, 1], got {fraction}")
    energy = np.cumsum(np.asarray(singular_values, dtype=float) ** 2)
    if energy[-1] == 0:
        raise DegenerateData("all singular values are zero")
    return int(np.searchsorted(energy / energy[-1], fraction - 1e-12) + 1)


def select_rank(
    dataset: Sequence[SnapshotMatrix | np.ndarray], fraction: float, center: bool = False
) -> int:
    """Smallest rank capturing ``fraction`` of the pooled snapshot energy.

    The result is capped so that every matrix admits it (``r <= n_T``, ``2r <= n``).
    """
    pooled = compute_global_pod(dataset, 1, center=center)
    arrays = [_as_array(item) for item in dataset]
    cap = min(min(a.shape[1] for a in arrays), arrays[0].shape[0] // 2)
    rank = rank_for_energy(pooled.singular_values, fraction)
    if rank > cap:
        logger.warning("energy fraction %g needs r=%d; capped at %d", fraction, rank, cap)
    return min(rank, cap)
