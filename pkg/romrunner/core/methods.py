"""Basis predictors compared by the evaluation harness."""

from __future__ import annotations

import logging
import warnings
from collections.abc import Sequence
from dataclasses import dataclass
from typing import TYPE_CHECKING, Protocol

from core.errors import ConfigError, InstabilityWarning
from core.grassmann import SubspacePoint
from core.interpolation import InterpolationConfig, interpolate_basis
from core.pgp import PgpModel, fit_hyperparameters, predict, train, with_hyperparameters
from core.pod import compute_global_pod, compute_pod
from core.types.domain import ParameterPoint, SnapshotMatrix

if TYPE_CHECKING:
    from core.types.run_config import PgpSection

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class BasisPrediction:
    subspace: SubspacePoint
    unstable: bool = False
    shrunk: bool = False


class BasisPredictor(Protocol):
    name: str

    def predict_basis(self, theta: ParameterPoint) -> BasisPrediction: ...


class PgpPredictor:
    name = "pgp"

    def __init__(self, model: PgpModel) -> None:
        self.model = model

    def predict_basis(self, theta: ParameterPoint) -> BasisPrediction:
        dist = predict(self.model, theta)
        return BasisPrediction(subspace=dist.map_subspace, shrunk=dist.shrunk)


class InterpolationPredictor:
    name = "interp"

    def __init__(
        self,
        train_subspaces: Sequence[tuple[ParameterPoint, SubspacePoint]],
        cfg: InterpolationConfig,
        global_basepoint: SubspacePoint | None = None,
    ) -> None:
        self.train_subspaces = list(train_subspaces)
        self.cfg = cfg
        self.global_basepoint = global_basepoint

    def predict_basis(self, theta: ParameterPoint) -> BasisPrediction:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", InstabilityWarning)
            result = interpolate_basis(
                self.train_subspaces, theta, self.cfg, self.global_basepoint
            )
        return BasisPrediction(subspace=result.subspace, unstable=result.unstable)


class GlobalPodPredictor:
    name = "global-pod"

    def __init__(self, basepoint: SubspacePoint) -> None:
        self.basepoint = basepoint

    def predict_basis(self, theta: ParameterPoint) -> BasisPrediction:
        return BasisPrediction(subspace=self.basepoint)


class OraclePredictor:
    """Per-parameter optimal POD computed from the held-out snapshots."""

    name = "oracle"

    def __init__(self, snapshots: Sequence[SnapshotMatrix], r: int, center: bool = False):
        self._by_theta = {s.theta.key(): s for s in snapshots}
        self.r = r
        self.center = center

    def predict_basis(self, theta: ParameterPoint) -> BasisPrediction:
        snapshots = self._by_theta.get(theta.key())
        if snapshots is None:
            raise ConfigError(f"oracle has no snapshots for {theta.label()}")
        return BasisPrediction(SubspacePoint(compute_pod(snapshots, self.r, self.center).basis))


def train_pgp(
    samples: Sequence[SnapshotMatrix], r: int, section: PgpSection, seed: int, center: bool
) -> PgpModel:
    """Train a pGP model and, when configured, fit its hyperparameters."""
    model = train(
        samples,
        r,
        section.kernel,
        basepoint=section.basepoint,
        sigma_k=section.sigma_k,
        center=center,
    )
    if not section.fit or model.k < 2:
        return model
    fit = fit_hyperparameters(
        model,
        gamma=section.gamma,
        restarts=section.restarts,
        seed=seed,
        fit_nugget=section.fit_nugget,
        initial=section.kernel,
    )
    return with_hyperparameters(model, fit.kernel, fit.sigma_k)


def build_predictors(
    samples: Sequence[SnapshotMatrix],
    r: int,
    methods: Sequence[str],
    pgp: PgpSection,
    interp: InterpolationConfig,
    seed: int = 0,
    center: bool = False,
    oracle_pool: Sequence[SnapshotMatrix] = (),
    pgp_model: PgpModel | None = None,
) -> list[BasisPredictor]:
    """Train every requested method on ``samples``.

    A given ``pgp_model`` is used as is instead of training one.
    """
    global_basepoint = SubspacePoint(compute_global_pod(samples, r, center=center).basis)
    predictors: list[BasisPredictor] = []
    for method in methods:
        if method == "pgp":
            model = pgp_model or train_pgp(samples, r, pgp, seed, center)
            predictors.append(PgpPredictor(model))
        elif method == "interp":
            subspaces = [
                (s.theta, SubspacePoint(compute_pod(s, r, center=center).basis)) for s in samples
            ]
            predictors.append(InterpolationPredictor(subspaces, interp, global_basepoint))
        elif method == "global-pod":
            predictors.append(GlobalPodPredictor(global_basepoint))
        elif method == "oracle":
            predictors.append(OraclePredictor(oracle_pool, r, center))
        else:
            raise ConfigError(f"unknown method {method!r}")
    logger.debug("built predictors %s on %d samples", list(methods), len(samples))
    return predictors
