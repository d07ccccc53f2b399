"""Prediction-quality metrics, method comparison and leave-one-out runs."""

from __future__ import annotations

import csv
import logging
from collections.abc import Callable, Sequence
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path

import numpy as np
from scipy import linalg

from core.errors import ConfigError, DimensionMismatch, IoFailure, ZeroOptimalError
from core.grassmann import SubspacePoint, geodesic_distance
from core.methods import BasisPredictor
from core.pod import StiefelBasis, compute_pod
from core.types.domain import SnapshotMatrix
from core.types.schemas import MetricRecord, MetricSummary, PairwiseWins

logger = logging.getLogger(__name__)

METRICS = ("e_f", "e_r", "e_a", "e_i")
TIE_TOL = 1e-12


def _data(snapshots: SnapshotMatrix | np.ndarray) -> np.ndarray:
    if isinstance(snapshots, SnapshotMatrix):
        return snapshots.data
    return np.asarray(snapshots, dtype=float)


def _basis(basis: SubspacePoint | StiefelBasis | np.ndarray) -> np.ndarray:
    if isinstance(basis, (SubspacePoint, StiefelBasis)):
        return basis.matrix
    return np.asarray(basis, dtype=float)


def residual(
    snapshots: SnapshotMatrix | np.ndarray, basis: SubspacePoint | StiefelBasis | np.ndarray
) -> np.ndarray:
    """``D - Phi Phi^T D``."""
    data, phi = _data(snapshots), _basis(basis)
    if phi.shape[0] != data.shape[0]:
        raise DimensionMismatch(f"basis has n={phi.shape[0]}, snapshots have n={data.shape[0]}")
    return data - phi @ (phi.T @ data)


def error_frobenius(
    snapshots: SnapshotMatrix | np.ndarray, basis: SubspacePoint | StiefelBasis | np.ndarray
) -> float:
    """Squared Frobenius norm of the projection residual."""
    return float(np.sum(residual(snapshots, basis) ** 2))


def optimal_error(snapshots: SnapshotMatrix | np.ndarray, r: int) -> float:
    """``e*``: the rank-``r`` POD residual of the snapshots themselves."""
    return compute_pod(snapshots, r).tail_energy


def error_relative(
    snapshots: SnapshotMatrix | np.ndarray,
    basis: SubspacePoint | StiefelBasis | np.ndarray,
    r: int | None = None,
) -> float:
    """Percentage excess of ``e_F`` over the optimal ``e*``.

    Raises:
        ZeroOptimalError: If ``e* < 1e-14 ||D||_F^2``.
    """
    data = _data(snapshots)
    r = r if r is not None else _basis(basis).shape[1]
    best = optimal_error(data, r)
    if best < 1e-14 * float(np.sum(data**2)):
        raise ZeroOptimalError(f"optimal rank-{r} error is zero; e_R is undefined")
    return (error_frobenius(data, basis) - best) / best * 100.0


def error_angle(
    reference: SubspacePoint | StiefelBasis | np.ndarray,
    basis: SubspacePoint | StiefelBasis | np.ndarray,
) -> float:
    return geodesic_distance(reference, basis)


def error_infinity(
    snapshots: SnapshotMatrix | np.ndarray, basis: SubspacePoint | StiefelBasis | np.ndarray
) -> float:
    """Infinity norm of the transposed residual: the largest column l1 error."""
    return float(linalg.norm(residual(snapshots, basis).T, np.inf))


# ── Reports ──────────────────────────────────────────────────────────


@dataclass
class MetricReport:
    records: list[MetricRecord] = field(default_factory=list)

    @property
    def methods(self) -> list[str]:
        return list(dict.fromkeys(record.method for record in self.records))

    def values(self, method: str, metric: str) -> dict[str, float | None]:
        return {
            record.theta: getattr(record, metric)
            for record in self.records
            if record.method == method
        }

    def wins(self) -> list[PairwiseWins]:
        """Strict wins (lower is better) per metric per method pair."""
        table: list[PairwiseWins] = []
        for first, second in combinations(self.methods, 2):
            for metric in METRICS:
                a, b = self.values(first, metric), self.values(second, metric)
                wins_a = wins_b = ties = 0
                for theta in a.keys() & b.keys():
                    va, vb = a[theta], b[theta]
                    if va is None or vb is None or abs(va - vb) < TIE_TOL:
                        ties += 1
                    elif va < vb:
                        wins_a += 1
                    else:
                        wins_b += 1
                table.append(
                    PairwiseWins(
                        method_a=first,
                        method_b=second,
                        metric=metric,
                        wins_a=wins_a,
                        wins_b=wins_b,
                        ties=ties,
                    )
                )
        return table

    def summary(self) -> MetricSummary:
        means: dict[str, dict[str, float | None]] = {}
        medians: dict[str, dict[str, float | None]] = {}
        for method in self.methods:
            means[method], medians[method] = {}, {}
            for metric in METRICS:
                column = [v for v in self.values(method, metric).values() if v is not None]
                means[method][metric] = float(np.mean(column)) if column else None
                medians[method][metric] = float(np.median(column)) if column else None
        return MetricSummary(
            n_points=len({record.theta for record in self.records}),
            methods=self.methods,
            means=means,
            medians=medians,
            wins=self.wins(),
            unstable_counts={
                m: sum(r.unstable for r in self.records if r.method == m) for m in self.methods
            },
            shrunk_counts={
                m: sum(r.shrunk for r in self.records if r.method == m) for m in self.methods
            },
        )

    def write_csv(self, path: Path) -> None:
        """One row per test point, method and metric."""
        try:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                writer = csv.writer(fh, lineterminator="\n")
                writer.writerow(["theta", "method", "metric", "value", "unstable", "shrunk"])
                for record in self.records:
                    for metric in METRICS:
                        value = getattr(record, metric)
                        writer.writerow(
                            [
                                record.theta,
                                record.method,
                                metric,
                                "" if value is None else f"{value:.17g}",
                                int(record.unstable),
                                int(record.shrunk),
                            ]
                        )
        except OSError as exc:
            raise IoFailure(f"cannot write report {path}: {exc}") from exc

    def write_summary(self, path: Path) -> None:
        try:
            path.write_text(self.summary().model_dump_json(indent=2), encoding="utf-8")
        except OSError as exc:
            raise IoFailure(f"cannot write summary {path}: {exc}") from exc


def score_point(
    snapshots: SnapshotMatrix, predictor: BasisPredictor, r: int
) -> MetricRecord:
    """All four metrics for one predictor at one held-out parameter point."""
    prediction = predictor.predict_basis(snapshots.theta)
    optimum = SubspacePoint(compute_pod(snapshots, r).basis)
    try:
        relative: float | None = error_relative(snapshots, prediction.subspace, r)
    except ZeroOptimalError:
        relative = None
    return MetricRecord(
        theta=snapshots.theta.label(),
        method=predictor.name,
        e_f=error_frobenius(snapshots, prediction.subspace),
        e_r=relative,
        e_a=error_angle(optimum, prediction.subspace),
        e_i=error_infinity(snapshots, prediction.subspace),
        unstable=prediction.unstable,
        shrunk=prediction.shrunk,
    )


def compare_methods(
    test: Sequence[SnapshotMatrix], predictors: Sequence[BasisPredictor], r: int
) -> MetricReport:
    """Score every predictor on every test point."""
    names = [p.name for p in predictors]
    if len(set(names)) != len(names):
        raise ConfigError(f"predictor names must be unique, got {names}")
    report = MetricReport()
    for snapshots in test:
        for predictor in predictors:
            report.records.append(score_point(snapshots, predictor, r))
    logger.info("scored %d methods on %d test points", len(predictors), len(test))
    return report


def loocv(
    samples: Sequence[SnapshotMatrix],
    build: Callable[[list[SnapshotMatrix]], Sequence[BasisPredictor]],
    r: int,
) -> MetricReport:
    """Leave-one-out over parameter points: ``build`` trains on the other ``k - 1``."""
    if len(samples) < 3:
        raise ConfigError("LOOCV needs at least three parameter points")
    report = MetricReport()
    for held_out in range(len(samples)):
        train = [s for i, s in enumerate(samples) if i != held_out]
        fold = compare_methods([samples[held_out]], build(train), r)
        report.records.extend(fold.records)
    return report
