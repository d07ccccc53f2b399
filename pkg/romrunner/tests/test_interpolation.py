from __future__ import annotations

import numpy as np
import pytest
from pydantic import ValidationError

from conftest import SmoothFamily
from core.errors import ConfigError, InstabilityWarning
from core.grassmann import SubspacePoint, geodesic_distance
from core.interpolation import (
    SHRUNK_RADIUS,
    InterpolationConfig,
    gaussian_rbf_weights,
    interpolate_basis,
    lagrange_weights,
    mean_nearest_neighbor_distance,
)
from core.pod import compute_global_pod, compute_pod
from core.types.domain import ParameterPoint


def training_pairs(samples, r):
    return [(s.theta, SubspacePoint(compute_pod(s, r).basis)) for s in samples]


def theta(v: float) -> ParameterPoint:
    return ParameterPoint((v,), ("theta1",))


def test_lagrange_weights_are_a_partition_of_unity() -> None:
    nodes = np.array([0.0, 1.0, 3.0])
    np.testing.assert_allclose(lagrange_weights(nodes, 3.0), [0.0, 0.0, 1.0])
    assert lagrange_weights(nodes, 1.7).sum() == pytest.approx(1.0)
    with pytest.raises(ConfigError):
        lagrange_weights(np.array([0.0, 0.0]), 0.5)


def test_gaussian_weights() -> None:
    thetas = np.array([[0.0], [1.0], [2.0]])
    weights = gaussian_rbf_weights(thetas, np.array([1.0]), bandwidth=1.0)
    assert weights.sum() == pytest.approx(1.0)
    assert weights[0] == pytest.approx(weights[2])
    assert weights[1] > weights[0]
    assert mean_nearest_neighbor_distance(np.array([[0.0], [1.0], [3.0]])) == pytest.approx(
        4.0 / 3.0
    )


@pytest.mark.parametrize("basepoint", [0, 2, "global-pod"])
def test_lagrange_reproduces_training_subspaces(
    smooth_family: SmoothFamily, basepoint: int | str
) -> None:
    samples = smooth_family([0.0, 0.25, 0.5, 0.75, 1.0])
    pairs = training_pairs(samples, 2)
    global_pod = SubspacePoint(compute_global_pod(samples, 2).basis)
    cfg = InterpolationConfig(scheme="lagrange", basepoint=basepoint)
    for point, expected in pairs:
        result = interpolate_basis(pairs, point, cfg, global_pod)
        assert not result.unstable
        assert geodesic_distance(result.subspace, expected) < 1e-8


def test_gaussian_rbf_with_narrow_bandwidth_snaps_to_nearest(smooth_family: SmoothFamily) -> None:
    pairs = training_pairs(smooth_family([0.0, 0.5, 1.0]), 2)
    cfg = InterpolationConfig(scheme="gaussian-rbf", rbf_bandwidth=0.01)
    result = interpolate_basis(pairs, theta(0.52), cfg)
    assert geodesic_distance(result.subspace, pairs[1][1]) < 1e-8


def test_gaussian_rbf_midpoint_lies_between(smooth_family: SmoothFamily) -> None:
    pairs = training_pairs(smooth_family([0.0, 1.0]), 2)
    result = interpolate_basis(pairs, theta(0.5), InterpolationConfig())
    np.testing.assert_allclose(result.weights, [0.5, 0.5])
    to_first = geodesic_distance(result.subspace, pairs[0][1])
    to_second = geodesic_distance(result.subspace, pairs[1][1])
    total = geodesic_distance(pairs[0][1], pairs[1][1])
    assert to_first == pytest.approx(total / 2, rel=1e-8)
    assert to_second == pytest.approx(total / 2, rel=1e-8)


def test_extrapolation_past_the_radius_warns_and_shrinks() -> None:
    angle = 1.2
    e1 = SubspacePoint.from_matrix(np.array([[1.0], [0.0], [0.0], [0.0]]))
    tilted = SubspacePoint.from_matrix(np.array([[np.cos(angle)], [np.sin(angle)], [0.0], [0.0]]))
    pairs = [(theta(0.0), e1), (theta(1.0), tilted)]
    cfg = InterpolationConfig(scheme="lagrange", basepoint=0)
    with pytest.warns(InstabilityWarning):
        result = interpolate_basis(pairs, theta(2.5), cfg)
    assert result.unstable
    assert result.max_singular_value == pytest.approx(2.5 * angle)
    assert geodesic_distance(result.subspace, e1) == pytest.approx(SHRUNK_RADIUS, abs=1e-9)


def test_invalid_inputs(smooth_family: SmoothFamily) -> None:
    pairs = training_pairs(smooth_family([0.0, 1.0]), 2)
    with pytest.raises(ConfigError):
        interpolate_basis(pairs[:1], theta(0.5))
    with pytest.raises(ConfigError):
        interpolate_basis(pairs, theta(0.5), InterpolationConfig(basepoint="global-pod"))
    two_d = [(ParameterPoint((v, v), ("a", "b")), s) for v, (_, s) in zip((0.0, 1.0), pairs)]
    with pytest.raises(ConfigError):
        interpolate_basis(
            two_d, ParameterPoint((0.5, 0.5), ("a", "b")), InterpolationConfig(scheme="lagrange")
        )
    with pytest.raises(ValidationError):
        InterpolationConfig(scheme="spline")


def test_gaussian_rbf_lift_is_a_convex_combination(
    smooth_family: SmoothFamily, rng: np.random.Generator
) -> None:
    samples = smooth_family([0.0, 0.2, 0.5, 0.6, 1.0])
    pairs = training_pairs(samples, 2)
    global_pod = SubspacePoint(compute_global_pod(samples, 2).basis)
    radius = max(geodesic_distance(global_pod, subspace) for _, subspace in pairs)
    cfg = InterpolationConfig(scheme="gaussian-rbf", basepoint="global-pod")
    for query in rng.uniform(-0.5, 1.5, size=20):
        result = interpolate_basis(pairs, theta(float(query)), cfg, global_pod)
        assert np.all(result.weights >= 0)
        assert result.weights.sum() == pytest.approx(1.0)
        assert geodesic_distance(global_pod, result.subspace) <= radius + 1e-8
