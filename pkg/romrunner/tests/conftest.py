from __future__ import annotations

from collections.abc import Callable, Sequence

import numpy as np
import pytest

from core.grassmann import SubspacePoint
from core.types.domain import ParameterPoint, SnapshotMatrix
from core.types.schemas import SolverConfig


def orthonormal(rng: np.random.Generator, n: int, r: int) -> np.ndarray:
    q, _ = np.linalg.qr(rng.standard_normal((n, r)))
    return q


def horizontal(rng: np.random.Generator, phi: np.ndarray) -> np.ndarray:
    """Random ``Z`` with ``phi^T Z = 0``."""
    g = rng.standard_normal(phi.shape)
    return g - phi @ (phi.T @ g)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


@pytest.fixture
def subspace(rng: np.random.Generator) -> Callable[[int, int], SubspacePoint]:
    def make(n: int, r: int) -> SubspacePoint:
        return SubspacePoint.from_matrix(orthonormal(rng, n, r))

    return make


@pytest.fixture
def small_solver() -> SolverConfig:
    return SolverConfig(nx=13, ny=13, t_final=0.3, n_snapshots=10)


SmoothFamily = Callable[..., list[SnapshotMatrix]]


@pytest.fixture
def smooth_family() -> SmoothFamily:
    """Snapshot matrices whose column space moves smoothly with a scalar theta."""

    def make(
        values: Sequence[float],
        n: int = 24,
        n_t: int = 8,
        rank: int = 4,
        spread: float = 0.3,
        seed: int = 7,
        name: str = "theta1",
    ) -> list[SnapshotMatrix]:
        rng = np.random.default_rng(seed)
        a = rng.standard_normal((n, rank))
        b = rng.standard_normal((n, rank))
        c = rng.standard_normal((rank, n_t))
        decay = np.diag(2.0 ** -np.arange(rank))
        return [
            SnapshotMatrix(
                data=(a + spread * v * b) @ decay @ c,
                theta=ParameterPoint(values=(float(v),), names=(name,)),
            )
            for v in values
        ]

    return make
