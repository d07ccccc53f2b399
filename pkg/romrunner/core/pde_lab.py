"""Snapshot generation for the 2-D advection-diffusion study.

The field lives on a cell-centered ``ny x nx`` grid over ``[0, lx] x [0, ly]``.
Each step of the explicit scheme is written in flux form: central differences
for diffusion with zero diffusive flux through the walls (homogeneous
Neumann), first-order upwind advection that lets mass leave through outflow
faces and admits nothing through inflow faces, forward Euler in time.
Snapshot columns are the field flattened in row-major order (index
``j * nx + i`` for row ``j`` along y and column ``i`` along x).
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import product

import numpy as np

from core.errors import ConfigError, EmptyGrid, NonPositiveDiffusivity, UnstableScheme
from core.types.domain import ParameterPoint, SnapshotMatrix
from core.types.schemas import SolverConfig

logger = logging.getLogger(__name__)

PHYSICAL_NAMES = ("v1", "v2", "d1", "d2")


@dataclass(frozen=True)
class Physics:
    velocity: tuple[float, float]
    diffusivity: tuple[float, float]

    @classmethod
    def from_theta(cls, theta: ParameterPoint, solver: SolverConfig) -> Physics:
        unknown = set(theta.names) - set(PHYSICAL_NAMES)
        if unknown:
            raise ConfigError(
                f"parameter names {sorted(unknown)} are not among {PHYSICAL_NAMES}"
            )
        given = theta.as_dict()
        v1, v2 = solver.default_velocity
        d1, d2 = solver.default_diffusivity
        return cls(
            velocity=(given.get("v1", v1), given.get("v2", v2)),
            diffusivity=(given.get("d1", d1), given.get("d2", d2)),
        )


def cell_centers(solver: SolverConfig) -> tuple[np.ndarray, np.ndarray]:
    hx, hy = solver.lx / solver.nx, solver.ly / solver.ny
    x = (np.arange(solver.nx) + 0.5) * hx
    y = (np.arange(solver.ny) + 0.5) * hy
    return x, y


def initial_field(solver: SolverConfig) -> np.ndarray:
    """Unit-amplitude Gaussian blob, shape ``(ny, nx)``."""
    x, y = cell_centers(solver)
    xc, yc = solver.blob_center
    xx, yy = np.meshgrid(x, y, indexing="xy")
    return np.exp(-((xx - xc) ** 2 + (yy - yc) ** 2) / (2.0 * solver.blob_width**2))


def stability_bound(physics: Physics, solver: SolverConfig) -> float:
    """Largest forward-Euler step keeping the upwind/central scheme monotone."""
    hx, hy = solver.lx / solver.nx, solver.ly / solver.ny
    (v1, v2), (d1, d2) = physics.velocity, physics.diffusivity
    rate = 2.0 * d1 / hx**2 + 2.0 * d2 / hy**2 + abs(v1) / hx + abs(v2) / hy
    return 1.0 / rate


def _flux_divergence(u: np.ndarray, v: float, d: float, h: float, axis: int) -> np.ndarray:
    # Upwind advective flux on all faces; zero-padded ghosts give no inflow.
    pad = [(0, 0), (0, 0)]
    pad[axis] = (1, 1)
    ghost = np.pad(u, pad)
    lo = [slice(None), slice(None)]
    hi = [slice(None), slice(None)]
    lo[axis] = slice(None, -1)
    hi[axis] = slice(1, None)
    flux = max(v, 0.0) * ghost[tuple(lo)] + min(v, 0.0) * ghost[tuple(hi)]

    # Diffusive flux on interior faces only (walls are insulated).
    interior = [slice(None), slice(None)]
    interior[axis] = slice(1, -1)
    flux[tuple(interior)] -= d * np.diff(u, axis=axis) / h
    return np.diff(flux, axis=axis) / h


def simulate_advection_diffusion(
    theta: ParameterPoint, solver: SolverConfig | None = None
) -> SnapshotMatrix:
    """Integrate the advection-diffusion equation for one parameter point.

    Returns the ``(nx * ny) x n_snapshots`` snapshot matrix sampled at
    ``t_k = k * T / n_snapshots`` for ``k = 1 .. n_snapshots``.

    Raises:
        NonPositiveDiffusivity: If either diffusivity is not positive.
        UnstableScheme: If an explicit ``dt`` exceeds the stability bound.
    """
    solver = solver or SolverConfig()
    physics = Physics.from_theta(theta, solver)
    if min(physics.diffusivity) <= 0:
        raise NonPositiveDiffusivity(
            f"diffusivities must be positive, got {physics.diffusivity} at {theta.label()}"
        )

    bound = stability_bound(physics, solver)
    interval = solver.t_final / solver.n_snapshots
    if solver.dt is not None:
        if solver.dt > bound:
            raise UnstableScheme(f"dt={solver.dt:.3g} exceeds stability bound {bound:.3g}")
        steps = max(1, math.ceil(interval / solver.dt - 1e-9))
    else:
        steps = max(1, math.ceil(interval / (solver.cfl_safety * bound)))
    dt = interval / steps

    hx, hy = solver.lx / solver.nx, solver.ly / solver.ny
    (v1, v2), (d1, d2) = physics.velocity, physics.diffusivity
    u = initial_field(solver)
    columns = np.empty((solver.nx * solver.ny, solver.n_snapshots))
    for k in range(solver.n_snapshots):
        for _ in range(steps):
            u = u - dt * (
                _flux_divergence(u, v1, d1, hx, axis=1) + _flux_divergence(u, v2, d2, hy, axis=0)
            )
        columns[:, k] = u.ravel(order="C")

    logger.debug(
        "simulated %s: dt=%.3e, %d steps per snapshot", theta.label(), dt, steps
    )
    return SnapshotMatrix(data=columns, theta=theta)


def simulate_grid(
    thetas: Sequence[ParameterPoint], solver: SolverConfig | None = None, threads: int = 1
) -> list[SnapshotMatrix]:
    """Simulate every parameter point; output order follows ``thetas``."""
    solver = solver or SolverConfig()
    if threads <= 1:
        return [simulate_advection_diffusion(theta, solver) for theta in thetas]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda theta: simulate_advection_diffusion(theta, solver), thetas))


def axis_values(lo: float, hi: float, step: float) -> np.ndarray:
    """Endpoint-inclusive arithmetic sequence ``lo, lo + step, ... <= hi``."""
    if step <= 0:
        raise ConfigError(f"grid step must be positive, got {step}")
    if hi < lo:
        return np.empty(0)
    count = math.floor((hi - lo) / step + 1e-9) + 1
    return np.round(lo + step * np.arange(count), 12)


def build_parameter_grid(
    lo: Sequence[float],
    hi: Sequence[float],
    step: Sequence[float],
    names: Sequence[str] | None = None,
) -> list[ParameterPoint]:
    """Cartesian product of per-axis sequences, last axis varying fastest.

    Raises:
        EmptyGrid: If any axis yields no points.
    """
    if not len(lo) == len(hi) == len(step):
        raise ConfigError("grid lo, hi and step must have the same length")
    names = tuple(names) if names is not None else tuple(f"theta{i + 1}" for i in range(len(lo)))
    if len(names) != len(lo):
        raise ConfigError(f"{len(names)} names for a {len(lo)}-dimensional grid")

    axes = [axis_values(a, b, s) for a, b, s in zip(lo, hi, step)]
    for name, values in zip(names, axes):
        if values.size == 0:
            raise EmptyGrid(f"axis {name} has no points")
    return [ParameterPoint(values=tuple(point), names=names) for point in product(*axes)]
