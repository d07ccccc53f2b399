from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np
import pytest

from conftest import SmoothFamily, orthonormal
from core.errors import ConfigError, DimensionMismatch, ZeroOptimalError
from core.grassmann import SubspacePoint
from core.interpolation import InterpolationConfig
from core.methods import (
    BasisPrediction,
    GlobalPodPredictor,
    OraclePredictor,
    build_predictors,
)
from core.metrics import (
    MetricReport,
    compare_methods,
    error_angle,
    error_frobenius,
    error_infinity,
    error_relative,
    loocv,
    optimal_error,
    residual,
)
from core.pod import compute_global_pod, compute_pod
from core.types.domain import ParameterPoint, SnapshotMatrix
from core.types.run_config import PgpSection
from core.types.schemas import KernelSpec, MetricRecord


def test_optimal_basis_attains_the_tail_energy(rng: np.random.Generator) -> None:
    data = rng.standard_normal((25, 10))
    pod = compute_pod(data, 3)
    s = np.linalg.svd(data, compute_uv=False)
    assert error_frobenius(data, pod.basis) == pytest.approx(np.sum(s[3:] ** 2), abs=1e-8)
    assert optimal_error(data, 3) == pytest.approx(np.sum(s[3:] ** 2), abs=1e-8)
    assert error_relative(data, pod.basis) == pytest.approx(0.0, abs=1e-8)


def test_spanning_and_orthogonal_bases(rng: np.random.Generator) -> None:
    phi = orthonormal(rng, 10, 4)
    data = phi[:, :2] @ rng.standard_normal((2, 6))
    assert error_frobenius(data, phi[:, :2]) == pytest.approx(0.0, abs=1e-20)
    complement = np.linalg.qr(np.hstack([phi, rng.standard_normal((10, 2))]))[0][:, 4:6]
    assert error_frobenius(data, complement) == pytest.approx(np.sum(data**2), rel=1e-12)


def test_relative_error_doubles() -> None:
    data = np.array([[2.0, 0.0], [0.0, 1.0], [0.0, 0.0], [0.0, 0.0]])
    basis = np.array([[np.sqrt(2 / 3)], [np.sqrt(1 / 3)], [0.0], [0.0]])
    assert error_frobenius(data, basis) == pytest.approx(2.0)
    assert error_relative(data, basis, 1) == pytest.approx(100.0)


def test_exact_low_rank_data_has_no_relative_error(rng: np.random.Generator) -> None:
    data = rng.standard_normal((8, 2)) @ rng.standard_normal((2, 5))
    with pytest.raises(ZeroOptimalError):
        error_relative(data, compute_pod(data, 2).basis)


def test_infinity_error_single_entry() -> None:
    data = np.zeros((4, 3))
    data[2, 1] = -0.7
    basis = np.array([[1.0], [0.0], [0.0], [0.0]])
    assert error_infinity(data, basis) == pytest.approx(0.7)
    exact = np.outer([1.0, 0.0, 0.0, 0.0], [1.0, 2.0, 3.0])
    assert error_infinity(exact, basis) == 0.0


def test_infinity_error_is_the_largest_column_l1(rng: np.random.Generator) -> None:
    for _ in range(100):
        data = rng.standard_normal((5, 3))
        basis = orthonormal(rng, 5, 2)
        res = residual(data, basis)
        brute = max(sum(abs(res[i, j]) for i in range(5)) for j in range(3))
        assert error_infinity(data, basis) == pytest.approx(brute, abs=1e-12)


def test_angle_error_on_lines_in_the_plane() -> None:
    for t in (0.2, 0.9, 1.4):
        line = np.array([[np.cos(t)], [np.sin(t)]])
        assert error_angle(np.array([[1.0], [0.0]]), line) == pytest.approx(t, abs=1e-10)


def test_dimension_mismatch(rng: np.random.Generator) -> None:
    with pytest.raises(DimensionMismatch):
        error_frobenius(rng.standard_normal((6, 3)), orthonormal(rng, 8, 2))


class _Fixed:
    def __init__(self, name: str, subspace: SubspacePoint) -> None:
        self.name = name
        self.subspace = subspace

    def predict_basis(self, theta: ParameterPoint) -> BasisPrediction:
        return BasisPrediction(subspace=self.subspace)


def test_identical_methods_only_tie(smooth_family: SmoothFamily) -> None:
    samples = smooth_family([0.1, 0.4, 0.7])
    basis = SubspacePoint(compute_global_pod(samples, 2).basis)
    report = compare_methods(samples, [_Fixed("a", basis), _Fixed("b", basis)], 2)
    for wins in report.wins():
        assert (wins.wins_a, wins.wins_b, wins.ties) == (0, 0, 3)


def test_oracle_beats_global_pod(smooth_family: SmoothFamily) -> None:
    train, test = smooth_family([0.0, 1.0]), smooth_family([0.25, 0.5, 0.75])
    global_pod = SubspacePoint(compute_global_pod(train, 2).basis)
    predictors = [GlobalPodPredictor(global_pod), OraclePredictor(test, 2)]
    report = compare_methods(test, predictors, 2)
    e_f = next(w for w in report.wins() if w.metric == "e_f")
    assert (e_f.method_a, e_f.method_b) == ("global-pod", "oracle")
    assert e_f.wins_b == 3
    assert e_f.wins_a + e_f.wins_b + e_f.ties == 3
    for value in report.values("oracle", "e_r").values():
        assert value == pytest.approx(0.0, abs=1e-7)


def test_duplicate_predictor_names(smooth_family: SmoothFamily) -> None:
    samples = smooth_family([0.0])
    basis = SubspacePoint(compute_pod(samples[0], 2).basis)
    with pytest.raises(ConfigError):
        compare_methods(samples, [_Fixed("a", basis), _Fixed("a", basis)], 2)


def test_missing_values_count_as_ties() -> None:
    report = MetricReport(
        records=[
            MetricRecord(theta="t", method="a", e_f=1.0, e_r=None, e_a=0.1, e_i=1.0),
            MetricRecord(theta="t", method="b", e_f=2.0, e_r=5.0, e_a=0.1, e_i=0.5),
        ]
    )
    by_metric = {w.metric: (w.wins_a, w.wins_b, w.ties) for w in report.wins()}
    assert by_metric == {"e_f": (1, 0, 0), "e_r": (0, 0, 1), "e_a": (0, 0, 1), "e_i": (0, 1, 0)}
    summary = report.summary()
    assert summary.means["a"]["e_r"] is None
    assert summary.n_points == 1


def test_loocv_on_identical_snapshots_is_exact(rng: np.random.Generator) -> None:
    data = rng.standard_normal((12, 2)) @ np.diag([3.0, 1.0]) @ rng.standard_normal((2, 6))
    data += 1e-3 * rng.standard_normal((12, 6))
    samples = [
        SnapshotMatrix(data=data, theta=ParameterPoint((v,), ("theta1",))) for v in (0.0, 0.5, 1.0)
    ]
    section = PgpSection(kernel=KernelSpec(xi=(0.0, 1.0, 0.3)), fit=False)

    def build(fold):
        return build_predictors(
            fold, 2, ["pgp", "interp", "global-pod"], section, InterpolationConfig()
        )

    report = loocv(samples, build, 2)
    assert len(report.records) == 3 * 3
    for record in report.records:
        assert record.e_a < 1e-7
    with pytest.raises(ConfigError):
        loocv(samples[:2], build, 2)


def test_reports_are_written(tmp_path: Path, smooth_family: SmoothFamily) -> None:
    samples = smooth_family([0.2, 0.6])
    basis = SubspacePoint(compute_global_pod(samples, 2).basis)
    report = compare_methods(samples, [_Fixed("a", basis), GlobalPodPredictor(basis)], 2)
    report.write_csv(tmp_path / "report.csv")
    report.write_summary(tmp_path / "summary.json")
    with open(tmp_path / "report.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 2 * 2 * 4
    assert set(rows[0]) == {"theta", "method", "metric", "value", "unstable", "shrunk"}
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["methods"] == ["a", "global-pod"]
    assert summary["n_points"] == 2
