"""POD basis interpolation on the Grassmann manifold.

Training subspaces are mapped to lifts at a common basepoint with the
logarithm map, the lifts are combined with Lagrange (1-D) or normalized
Gaussian radial-basis weights, and the combination is mapped back with the
exponential map.
"""

from __future__ import annotations

import logging
import warnings
from collections.abc import Sequence
from dataclasses import dataclass
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy import linalg
from scipy.spatial.distance import cdist
from scipy.special import softmax

from core.errors import ConfigError, DimensionMismatch, InstabilityWarning
from core.grassmann import SubspacePoint, exp_map, log_map
from core.types.domain import ParameterPoint

logger = logging.getLogger(__name__)

INJECTIVITY_RADIUS = np.pi / 2
SHRUNK_RADIUS = np.pi / 2 - 1e-6


class InterpolationConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    scheme: Literal["lagrange", "gaussian-rbf"] = "gaussian-rbf"
    rbf_bandwidth: float | None = Field(
        default=None, gt=0, description="None uses the mean nearest-neighbor distance"
    )
    basepoint: int | Literal["global-pod"] = Field(
        default=0, description="Training index of the basepoint, or the global POD"
    )


@dataclass(frozen=True, eq=False)
class InterpolationResult:
    subspace: SubspacePoint
    weights: np.ndarray
    max_singular_value: float
    unstable: bool


def lagrange_weights(thetas: np.ndarray, query: float) -> np.ndarray:
    """Lagrange basis polynomials at ``query`` for distinct 1-D nodes."""
    nodes = np.asarray(thetas, dtype=float).ravel()
    if len(np.unique(nodes)) != len(nodes):
        raise ConfigError("Lagrange interpolation needs distinct parameter values")
    weights = np.ones(len(nodes))
    for i, node in enumerate(nodes):
        others = np.delete(nodes, i)
        weights[i] = np.prod((query - others) / (node - others))
    return weights


def mean_nearest_neighbor_distance(thetas: np.ndarray) -> float:
    distances = cdist(thetas, thetas)
    np.fill_diagonal(distances, np.inf)
    return float(np.mean(distances.min(axis=1)))


def gaussian_rbf_weights(thetas: np.ndarray, query: np.ndarray, bandwidth: float) -> np.ndarray:
    """Normalized weights ``exp(-|q - t_i|^2 / (2 h^2))`` summing to one."""
    sq = cdist(query[None, :], thetas, "sqeuclidean")[0]
    return softmax(-sq / (2.0 * bandwidth**2))


def interpolate_basis(
    train: Sequence[tuple[ParameterPoint, SubspacePoint]],
    theta: ParameterPoint,
    cfg: InterpolationConfig | None = None,
    global_basepoint: SubspacePoint | None = None,
) -> InterpolationResult:
    """Predict the subspace at ``theta`` from training subspaces.

    When the combined lift has a singular value above pi/2 an
    ``InstabilityWarning`` is issued, the singular values are clipped to
    pi/2 - 1e-6 and the result is flagged ``unstable``.

    Raises:
        SingularAlignment: Propagated from the logarithm map.
    """
    cfg = cfg or InterpolationConfig()
    if len(train) < 2:
        raise ConfigError("interpolation needs at least two training points")
    thetas = np.array([point.values for point, _ in train])
    query = theta.as_array()
    if query.shape != thetas.shape[1:]:
        raise DimensionMismatch(f"query has {query.size} components, training has {thetas.shape[1]}")

    if cfg.basepoint == "global-pod":
        if global_basepoint is None:
            raise ConfigError("basepoint 'global-pod' requires the global POD subspace")
        basepoint = global_basepoint
    else:
        basepoint = train[cfg.basepoint][1]

    if cfg.scheme == "lagrange":
        if thetas.shape[1] != 1:
            raise ConfigError("Lagrange interpolation is defined for one parameter only")
        weights = lagrange_weights(thetas[:, 0], float(query[0]))
    else:
        bandwidth = cfg.rbf_bandwidth or mean_nearest_neighbor_distance(thetas)
        weights = gaussian_rbf_weights(thetas, query, bandwidth)

    combined = np.zeros_like(basepoint.matrix)
    for weight, (_, subspace) in zip(weights, train):
        if weight != 0.0:
            combined += weight * log_map(basepoint, subspace).Z

    u, s, vt = linalg.svd(combined, full_matrices=False)
    largest = float(s.max(initial=0.0))
    unstable = largest > INJECTIVITY_RADIUS
    if unstable:
        warnings.warn(
            f"interpolated lift at {theta.label()} has singular value {largest:.4f} > pi/2",
            InstabilityWarning,
            stacklevel=2,
        )
        logger.warning("shrinking unstable interpolation at %s", theta.label())
        combined = (u * np.minimum(s, SHRUNK_RADIUS)) @ vt

    return InterpolationResult(
        subspace=exp_map(basepoint, combined),
        weights=weights,
        max_singular_value=largest,
        unstable=unstable,
    )
