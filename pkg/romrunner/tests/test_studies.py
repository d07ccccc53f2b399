"""Desk-scale studies on simulated advection-diffusion data."""

from __future__ import annotations

from itertools import product
from pathlib import Path

import numpy as np
import pytest

from core.methods import BasisPredictor, build_predictors
from core.metrics import MetricReport, compare_methods, loocv
from core.pde_lab import build_parameter_grid, simulate_grid
from core.pgp import fit_gamma_path, train
from core.types.domain import ParameterPoint, SnapshotMatrix
from core.types.run_config import RunConfig, load_run_config
from core.types.schemas import KernelSpec
from tools.common import grid_points, on_lattice

pytestmark = pytest.mark.slow

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def config(name: str) -> RunConfig:
    return load_run_config(CONFIGS / name)


def split(cfg: RunConfig) -> tuple[list[SnapshotMatrix], list[SnapshotMatrix]]:
    snapshots = simulate_grid(grid_points(cfg.grid), cfg.solver)
    marks = [on_lattice(s.theta, cfg.grid.lo, cfg.split.train_step) for s in snapshots]
    train_set = [s for s, mark in zip(snapshots, marks) if mark]
    test_set = [s for s, mark in zip(snapshots, marks) if not mark]
    return train_set, test_set


def win_share(report: MetricReport, method: str, other: str) -> float:
    mine, theirs = report.values(method, "e_f"), report.values(other, "e_f")
    return sum(mine[t] < theirs[t] for t in mine) / len(mine)


def test_vanishing_signal_matches_global_pod() -> None:
    cfg = config("desk_scale.toml")
    names = ("d1", "d2")
    train_grid = build_parameter_grid([0.01, 0.01], [0.05, 0.05], [0.02, 0.02], names)
    levels = (0.014, 0.022, 0.026, 0.038, 0.046)
    test_grid = [ParameterPoint((a, b), names) for a, b in product(levels, levels)]

    samples = simulate_grid(train_grid, cfg.solver)
    test_set = simulate_grid(test_grid, cfg.solver)
    pgp = cfg.pgp.model_copy(
        update={"fit": False, "kernel": KernelSpec(xi=(1.0, 1e-6, 0.3, 0.3))}
    )
    predictors = build_predictors(samples, 5, ["pgp", "global-pod"], pgp, cfg.interp)
    report = compare_methods(test_set, predictors, 5)
    ours, pooled = report.values("pgp", "e_f"), report.values("global-pod", "e_f")
    gaps = [abs(ours[t] - pooled[t]) / pooled[t] for t in ours]
    assert len(gaps) == 25
    assert max(gaps) < 1e-3


def test_desk_scale_pgp_beats_both_baselines() -> None:
    cfg = config("desk_scale.toml")
    train_set, test_set = split(cfg)
    assert len(train_set) == 9 and len(test_set) == 112
    predictors = build_predictors(
        train_set, cfg.pod.r, cfg.evaluation.methods, cfg.pgp, cfg.interp, seed=cfg.seed
    )
    report = compare_methods(test_set, predictors, cfg.pod.r)
    assert win_share(report, "pgp", "interp") >= 0.6
    assert win_share(report, "pgp", "global-pod") >= 0.6


def test_regularized_lengthscales_grow_and_rank_velocity_above_diffusivity() -> None:
    cfg = config("ard_four_parameter.toml")
    lattice = build_parameter_grid(
        cfg.grid.lo, cfg.grid.hi, cfg.split.train_step, names=cfg.grid.names
    )
    samples = simulate_grid(lattice, cfg.solver)
    assert len(samples) == 81
    model = train(samples, cfg.pod.r, cfg.pgp.kernel, basepoint="global-pod")

    gammas = [0.0, 500.0, 1000.0, 1500.0, 2000.0]
    path = fit_gamma_path(model, gammas, restarts=cfg.pgp.restarts, seed=cfg.seed)
    assert [fit.gamma for fit in path] == gammas
    scales = np.array([fit.kernel.lengthscales for fit in path])
    assert np.all(np.diff(scales, axis=0) >= -1e-6 * scales[:-1])
    velocity, diffusivity = scales[-1]
    assert velocity > diffusivity


def test_one_dimensional_sweep_leave_one_out() -> None:
    cfg = config("loocv_sweep.toml")
    samples = simulate_grid(grid_points(cfg.grid), cfg.solver)
    assert len(samples) == 7

    def build(fold: list[SnapshotMatrix]) -> list[BasisPredictor]:
        return build_predictors(
            fold, cfg.pod.r, cfg.evaluation.methods, cfg.pgp, cfg.interp, seed=cfg.seed
        )

    report = loocv(samples, build, cfg.pod.r)
    ours, interp = report.values("pgp", "e_f"), report.values("interp", "e_f")
    assert len(ours) == 7
    assert sum(ours[t] <= interp[t] for t in ours) >= 4
