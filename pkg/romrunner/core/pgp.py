"""Projected Gaussian process regression of subspaces.

Training subspaces are mapped to coordinates ``y_i`` in R^(nr - r) at a fixed
basepoint (log map followed by the lift frame). The coordinates follow a
Gaussian process whose covariance is ``Omega (x) sigma_K^2 I``; predictions
and samples are projected back to the manifold through the exponential map.
With this Kronecker structure every solve is ``k x k``: the predictive mean
is ``Y^T Omega^-1 omega_*`` and the predictive covariance is the scalar
``c_* = omega_** - omega_*^T Omega^-1 omega_*`` times ``sigma_K^2 I``.
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from pydantic import ValidationError
from scipy import linalg
from scipy.optimize import minimize
from scipy.spatial.distance import cdist
from scipy.stats import chi2, qmc

from core.dataset import read_matrix, write_matrix
from core.errors import (
    ConfigError,
    DimensionMismatch,
    IllConditionedKernel,
    IoFailure,
    OptimizationFailed,
    SchemaMismatch,
)
from core.grassmann import (
    LiftFrame,
    SubspacePoint,
    build_lift_frame,
    coords_to_lift,
    exp_map,
    geodesic_distance,
    lift_to_coords,
    log_map,
    shrink_to_ball,
)
from core.pod import StiefelBasis, compute_global_pod, compute_pod
from core.types.domain import ParameterPoint, SnapshotMatrix
from core.types.schemas import KernelSpec, ModelArchive

logger = logging.getLogger(__name__)

JITTER_FACTOR = 1e-10
COND_LIMIT = 1e12
EQUALITY_TOL = 1e-12
ZERO_VARIANCE_TOL = 1e-10
WHITE_NOISE_LEVEL = 0.9999

AMPLITUDE_BOX = (1e-3, 1e1)
LENGTHSCALE_BOX = (1e-2, 1e1)
DEFAULT_RESTARTS = 8


# ── Kernels ──────────────────────────────────────────────────────────


def kernel_matrix(
    kernel: KernelSpec, a: np.ndarray, b: np.ndarray, extra_nugget: float = 0.0
) -> np.ndarray:
    """Covariances between the rows of ``a`` and ``b`` (standardized inputs).

    ``extra_nugget`` joins the delta term, so it applies wherever two inputs
    coincide.
    """
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    if a.shape[1] != b.shape[1]:
        raise DimensionMismatch(f"kernel inputs differ in width: {a.shape[1]} vs {b.shape[1]}")
    same = cdist(a, b, "chebyshev") <= EQUALITY_TOL
    if kernel.family == "exponential":
        amplitude, lengthscale = kernel.xi
        values = amplitude * np.exp(-cdist(a, b) / lengthscale)
        return values + extra_nugget * same

    nugget, signal = kernel.xi[0], kernel.xi[1]
    scales = np.asarray(kernel.lengthscales)[list(kernel.group_map(a.shape[1]))]
    sq = cdist(a / scales, b / scales, "sqeuclidean")
    return signal**2 * np.exp(-0.5 * sq) + (nugget**2 + extra_nugget) * same


def kernel_eval(kernel: KernelSpec, theta_i: np.ndarray, theta_j: np.ndarray) -> float:
    """Single covariance ``omega(theta_i, theta_j)`` on standardized inputs."""
    return float(kernel_matrix(kernel, np.atleast_1d(theta_i), np.atleast_1d(theta_j))[0, 0])


def prior_variance(kernel: KernelSpec) -> float:
    """``omega(theta, theta)``."""
    if kernel.family == "exponential":
        return kernel.xi[0]
    return kernel.xi[0] ** 2 + kernel.xi[1] ** 2


def nugget_only(kernel: KernelSpec) -> KernelSpec:
    """The ARD kernel with unit nugget and no signal (white noise over theta)."""
    return kernel.model_copy(update={"xi": (1.0, 0.0, *kernel.lengthscales)})


# ── Model ────────────────────────────────────────────────────────────


@dataclass(frozen=True, eq=False)
class Standardization:
    """Per-component affine map of theta onto [0, 1] from training min/max."""

    lo: np.ndarray
    hi: np.ndarray

    @classmethod
    def fit(cls, thetas: np.ndarray) -> Standardization:
        return cls(lo=thetas.min(axis=0), hi=thetas.max(axis=0))

    def apply(self, thetas: np.ndarray) -> np.ndarray:
        span = np.where(self.hi > self.lo, self.hi - self.lo, 1.0)
        return (np.asarray(thetas, dtype=float) - self.lo) / span


@dataclass(frozen=True, eq=False)
class PgpModel:
    basepoint: SubspacePoint
    basepoint_kind: str
    frame: LiftFrame
    names: tuple[str, ...]
    train_thetas: np.ndarray  # (k, d) raw
    standardized: np.ndarray  # (k, d) in [0, 1]
    train_coords: np.ndarray  # (k, nr - r)
    kernel: KernelSpec
    sigma_k: float
    standardization: Standardization
    omega: np.ndarray  # (k, k) including jitter
    omega_factor: tuple[np.ndarray, bool]
    jitter: float
    center_snapshots: bool = False
    max_train_norm: float = 0.0
    outside_radius: int = 0

    @property
    def k(self) -> int:
        return self.train_coords.shape[0]

    @property
    def n(self) -> int:
        return self.frame.n

    @property
    def r(self) -> int:
        return self.frame.r


@dataclass(frozen=True, eq=False)
class PredictiveDistribution:
    mean_coords: np.ndarray
    variance_scale: float
    map_subspace: SubspacePoint
    shrunk: bool
    raw_norm: float


@dataclass(frozen=True, eq=False)
class SampledSubspaces:
    subspaces: list[SubspacePoint]
    shrunk: np.ndarray


@dataclass(frozen=True)
class FitResult:
    kernel: KernelSpec
    sigma_k: float
    log_likelihood: float
    objective: float
    gamma: float


def _factorize(
    kernel: KernelSpec, standardized: np.ndarray
) -> tuple[np.ndarray, tuple[np.ndarray, bool], float]:
    base = kernel_matrix(kernel, standardized, standardized)
    jitter = JITTER_FACTOR * float(np.mean(np.diag(base)))
    omega = kernel_matrix(kernel, standardized, standardized, extra_nugget=jitter)
    cond = np.linalg.cond(omega)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise IllConditionedKernel(f"kernel matrix condition number {cond:.2e} after jitter")
    try:
        factor = linalg.cho_factor(omega, lower=True)
    except linalg.LinAlgError as exc:
        raise IllConditionedKernel(f"kernel matrix is not positive definite: {exc}") from exc
    return omega, factor, jitter


def _resolve_basepoint(
    basepoint: str | int | SubspacePoint,
    samples: Sequence[SnapshotMatrix],
    bases: list[SubspacePoint],
    r: int,
    center: bool,
) -> tuple[SubspacePoint, str]:
    if isinstance(basepoint, SubspacePoint):
        return basepoint, "explicit"
    if basepoint == "global-pod":
        pooled = compute_global_pod(samples, r, center=center)
        return SubspacePoint(pooled.basis), "global-pod"
    if isinstance(basepoint, int) and 0 <= basepoint < len(bases):
        return bases[basepoint], f"train:{basepoint}"
    raise ConfigError(f"unknown basepoint {basepoint!r}")


def train(
    samples: Sequence[SnapshotMatrix],
    r: int,
    kernel: KernelSpec,
    basepoint: str | int | SubspacePoint = "global-pod",
    sigma_k: float = 1.0,
    center: bool = False,
) -> PgpModel:
    """Map training subspaces to coordinates and factorize the kernel matrix.

    Raises:
        SingularAlignment: If a training subspace is pi/2 or more from the basepoint.
        IllConditionedKernel: If the kernel matrix cannot be factorized.
    """
    if not samples:
        raise ConfigError("training needs at least one snapshot matrix")
    names = samples[0].theta.names
    if any(s.theta.names != names for s in samples):
        raise DimensionMismatch("training parameter points disagree on component names")

    bases = [SubspacePoint(compute_pod(s, r, center=center).basis) for s in samples]
    mu, kind = _resolve_basepoint(basepoint, samples, bases, r, center)
    frame = build_lift_frame(mu)
    coords = np.vstack([lift_to_coords(frame, log_map(mu, b)).y for b in bases])

    norms = np.linalg.norm(coords, axis=1)
    outside = int(np.sum(norms >= np.pi / 2))
    if outside:
        logger.warning(
            "%d training coordinates lie outside the injectivity radius (max %.3f)",
            outside,
            float(norms.max()),
        )

    thetas = np.array([s.theta.values for s in samples])
    standardization = Standardization.fit(thetas)
    standardized = standardization.apply(thetas)
    omega, factor, jitter = _factorize(kernel, standardized)
    logger.info("trained pGP: k=%d, n=%d, r=%d, basepoint=%s", len(samples), frame.n, r, kind)
    return PgpModel(
        basepoint=mu,
        basepoint_kind=kind,
        frame=frame,
        names=names,
        train_thetas=thetas,
        standardized=standardized,
        train_coords=coords,
        kernel=kernel,
        sigma_k=sigma_k,
        standardization=standardization,
        omega=omega,
        omega_factor=factor,
        jitter=jitter,
        center_snapshots=center,
        max_train_norm=float(norms.max()),
        outside_radius=outside,
    )


def with_hyperparameters(model: PgpModel, kernel: KernelSpec, sigma_k: float) -> PgpModel:
    """The same training data under another kernel."""
    omega, factor, jitter = _factorize(kernel, model.standardized)
    return replace(
        model, kernel=kernel, sigma_k=sigma_k, omega=omega, omega_factor=factor, jitter=jitter
    )


# ── Prediction ───────────────────────────────────────────────────────


def _query_array(model: PgpModel, theta: ParameterPoint | np.ndarray) -> np.ndarray:
    if isinstance(theta, ParameterPoint):
        if theta.names != model.names:
            raise DimensionMismatch(f"query names {theta.names} differ from {model.names}")
        raw = theta.as_array()
    else:
        raw = np.asarray(theta, dtype=float)
    if raw.shape != (len(model.names),):
        raise DimensionMismatch(f"query needs {len(model.names)} components, got {raw.shape}")
    return model.standardization.apply(raw)


def predict(model: PgpModel, theta: ParameterPoint | np.ndarray) -> PredictiveDistribution:
    """Predictive mean coordinates, variance scale and MAP subspace at ``theta``."""
    x = _query_array(model, theta)[None, :]
    cross = kernel_matrix(model.kernel, x, model.standardized, extra_nugget=model.jitter)[0]
    alpha = linalg.cho_solve(model.omega_factor, cross)
    mean = model.train_coords.T @ alpha

    own = prior_variance(model.kernel)
    variance = own - float(cross @ alpha)
    if variance <= ZERO_VARIANCE_TOL * own:
        variance = 0.0

    raw_norm = float(np.linalg.norm(mean))
    mean, shrunk = shrink_to_ball(mean)
    return PredictiveDistribution(
        mean_coords=mean,
        variance_scale=variance,
        map_subspace=exp_map(model.basepoint, coords_to_lift(model.frame, mean)),
        shrunk=shrunk,
        raw_norm=raw_norm,
    )


def sample_subspaces(
    dist: PredictiveDistribution, model: PgpModel, count: int, seed: int | None = 0
) -> SampledSubspaces:
    """Draw subspaces from the projected predictive distribution.

    Draws outside the pi/2 ball are shrunk onto its sphere like the MAP
    prediction; ``shrunk`` flags them.
    """
    if count < 1:
        raise ConfigError("sample count must be at least 1")
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal((count, dist.mean_coords.size))
    scale = np.sqrt(dist.variance_scale) * model.sigma_k
    subspaces: list[SubspacePoint] = []
    flags = np.zeros(count, dtype=bool)
    for i in range(count):
        y, flags[i] = shrink_to_ball(dist.mean_coords + scale * noise[i])
        subspaces.append(exp_map(model.basepoint, coords_to_lift(model.frame, y)))
    return SampledSubspaces(subspaces=subspaces, shrunk=flags)


def uncertainty_stddev(
    dist: PredictiveDistribution, model: PgpModel, count: int = 1000, seed: int | None = 0
) -> float:
    """Bootstrap standard deviation of sample-to-MAP geodesic distances."""
    if count < 2:
        raise ConfigError("uncertainty needs at least two samples")
    if dist.variance_scale == 0.0:
        return 0.0
    samples = sample_subspaces(dist, model, count, seed)
    distances = [geodesic_distance(s, dist.map_subspace) for s in samples.subspaces]
    return float(np.std(distances, ddof=1))


# ── Hyperparameters ──────────────────────────────────────────────────


@dataclass(frozen=True)
class _Parameterization:
    """Maps unconstrained log-parameters to a normalized kernel.

    ARD: ``[log(xi1 / xi2)?, log ell_1, ..]`` with ``xi1^2 + xi2^2 = 1``;
    exponential: ``[log ell]`` with unit amplitude. ``sigma_K^2`` is profiled.
    """

    family: str
    groups: tuple[int, ...] | None
    n_lengthscales: int
    fit_nugget: bool

    @property
    def bounds(self) -> list[tuple[float, float]]:
        ratio = np.log(AMPLITUDE_BOX[0] / AMPLITUDE_BOX[1])
        ell = (float(np.log(LENGTHSCALE_BOX[0])), float(np.log(LENGTHSCALE_BOX[1])))
        head = [(float(ratio), float(-ratio))] if self.uses_ratio else []
        return head + [ell] * self.n_lengthscales

    @property
    def uses_ratio(self) -> bool:
        return self.family != "exponential" and self.fit_nugget

    def kernel(self, params: np.ndarray) -> KernelSpec:
        params = np.asarray(params, dtype=float)
        if self.family == "exponential":
            return KernelSpec(family="exponential", xi=(1.0, float(np.exp(params[0]))))
        if self.uses_ratio:
            ratio = float(np.exp(params[0]))
            signal = 1.0 / np.sqrt(1.0 + ratio**2)
            amplitudes = (ratio * signal, signal)
            scales = params[1:]
        else:
            amplitudes = (0.0, 1.0)
            scales = params
        return KernelSpec(
            family="ard-squared-exponential",
            xi=(*(float(a) for a in amplitudes), *(float(np.exp(s)) for s in scales)),
            groups=self.groups,
        )

    def encode(self, kernel: KernelSpec) -> np.ndarray:
        scales = list(np.log(kernel.lengthscales))
        if not self.uses_ratio:
            return np.asarray(scales)
        nugget, signal = kernel.xi[0], kernel.xi[1]
        lo, hi = self.bounds[0]
        if signal <= 0:
            ratio = hi
        elif nugget <= 0:
            ratio = lo
        else:
            ratio = float(np.clip(np.log(nugget / signal), lo, hi))
        return np.asarray([ratio, *scales])


def profiled_log_likelihood(
    kernel: KernelSpec, standardized: np.ndarray, gram: np.ndarray, n_coords: int
) -> tuple[float, float]:
    """Log marginal likelihood with ``sigma_K^2`` profiled out.

    ``gram`` is ``Y Y^T`` of the stacked training coordinates, so
    ``sum_j y~_j^T Omega^-1 y~_j = tr(Omega^-1 Y Y^T)``.

    Returns:
        ``(log_likelihood, sigma_k_squared)``.
    """
    k = standardized.shape[0]
    omega, factor, _ = _factorize(kernel, standardized)
    logdet = 2.0 * float(np.sum(np.log(np.diag(factor[0]))))
    quad = float(np.trace(linalg.cho_solve(factor, gram)))
    total = k * n_coords
    sigma2 = max(quad / total, np.finfo(float).tiny)
    loglik = (
        -0.5 * n_coords * logdet
        - 0.5 * total * np.log(sigma2)
        - 0.5 * total * (1.0 + np.log(2.0 * np.pi))
    )
    return float(loglik), sigma2


def fit_hyperparameters(
    model: PgpModel,
    gamma: float = 0.0,
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 0,
    fit_nugget: bool = True,
    initial: KernelSpec | None = None,
    lengthscale_floor: Sequence[float] | None = None,
) -> FitResult:
    """Penalized maximum likelihood for the kernel and ``sigma_K``.

    Maximizes the profiled log marginal likelihood minus
    ``gamma * sum_g ell_g^-2`` by Nelder-Mead over log-parameters from
    ``restarts`` scrambled-Sobol starts in the search box (plus ``initial``
    when given). ``lengthscale_floor`` raises the lower edge of the box per
    length-scale group.

    When the nugget is fitted and the best kernel does not beat the
    nugget-only kernel by a likelihood-ratio test at ``WHITE_NOISE_LEVEL``,
    the nugget-only kernel is returned.

    Raises:
        OptimizationFailed: If no start yields a finite objective.
    """
    if gamma < 0:
        raise ConfigError(f"regularization weight must be non-negative, got {gamma}")
    if model.k < 2:
        raise ConfigError("hyperparameter fitting needs at least two training points")

    template = model.kernel
    param = _Parameterization(
        family=template.family,
        groups=template.groups,
        n_lengthscales=template.n_lengthscales,
        fit_nugget=fit_nugget,
    )
    gram = model.train_coords @ model.train_coords.T
    n_coords = model.train_coords.shape[1]

    def penalty(kernel: KernelSpec) -> float:
        return gamma * float(np.sum(np.asarray(kernel.lengthscales) ** -2.0))

    def objective(params: np.ndarray) -> float:
        kernel = param.kernel(params)
        try:
            loglik, _ = profiled_log_likelihood(kernel, model.standardized, gram, n_coords)
        except (IllConditionedKernel, linalg.LinAlgError, ValueError):
            return 1e300
        value = -(loglik - penalty(kernel))
        return value if np.isfinite(value) else 1e300

    bounds = param.bounds
    if lengthscale_floor is not None:
        floor = np.log(np.asarray(lengthscale_floor, dtype=float))
        if floor.shape != (param.n_lengthscales,):
            raise DimensionMismatch(
                f"length-scale floor needs {param.n_lengthscales} entries, got {floor.shape}"
            )
        head = 1 if param.uses_ratio else 0
        for g, value in enumerate(floor):
            low, high = bounds[head + g]
            bounds[head + g] = (float(min(max(low, value), high - 1e-9)), high)
    lo = np.array([b[0] for b in bounds])
    hi = np.array([b[1] for b in bounds])
    sobol = qmc.Sobol(d=len(bounds), scramble=True, seed=seed)
    starts = list(qmc.scale(sobol.random(restarts), lo, hi)) if restarts > 0 else []
    if initial is not None:
        starts.insert(0, np.clip(param.encode(initial), lo, hi))
    if not starts:
        raise ConfigError("hyperparameter fitting needs at least one start")

    best = None
    for start in starts:
        result = minimize(
            objective,
            start,
            method="Nelder-Mead",
            bounds=bounds,
            options={"xatol": 1e-6, "fatol": 1e-9, "maxiter": 4000},
        )
        if result.fun < 1e300 and (best is None or result.fun < best.fun):
            best = result
    if best is None:
        raise OptimizationFailed("every optimization start diverged or lost positive definiteness")

    kernel = param.kernel(best.x)
    objective_value = float(best.fun)
    loglik, sigma2 = profiled_log_likelihood(kernel, model.standardized, gram, n_coords)
    if param.uses_ratio:
        noise = nugget_only(kernel)
        noise_loglik, noise_sigma2 = profiled_log_likelihood(
            noise, model.standardized, gram, n_coords
        )
        threshold = float(chi2.ppf(WHITE_NOISE_LEVEL, df=len(bounds)))
        if 2.0 * (loglik - noise_loglik) < threshold:
            logger.info(
                "likelihood gain %.4g over the nugget-only kernel is below %.4g; "
                "dropping the signal",
                loglik - noise_loglik,
                threshold / 2.0,
            )
            kernel, loglik, sigma2 = noise, noise_loglik, noise_sigma2
            objective_value = -(loglik - penalty(kernel))
    logger.info(
        "fitted kernel xi=%s sigma_K=%.4g at gamma=%g (loglik %.6g)",
        tuple(round(x, 6) for x in kernel.xi),
        np.sqrt(sigma2),
        gamma,
        loglik,
    )
    return FitResult(
        kernel=kernel,
        sigma_k=float(np.sqrt(sigma2)),
        log_likelihood=loglik,
        objective=objective_value,
        gamma=gamma,
    )


def fit_gamma_path(
    model: PgpModel,
    gammas: Sequence[float],
    restarts: int = DEFAULT_RESTARTS,
    seed: int = 0,
    fit_nugget: bool = True,
) -> list[FitResult]:
    """Fit along increasing ``gammas``, warm-starting from the previous optimum.

    The previous length-scales floor the next search, so the fitted
    length-scales are non-decreasing along the path.
    """
    results: list[FitResult] = []
    previous: KernelSpec | None = None
    for gamma in sorted(gammas):
        fit = fit_hyperparameters(
            model,
            gamma=gamma,
            restarts=restarts,
            seed=seed,
            fit_nugget=fit_nugget,
            initial=previous,
            lengthscale_floor=None if previous is None else previous.lengthscales,
        )
        results.append(fit)
        previous = fit.kernel
    return results


# ── Archive ──────────────────────────────────────────────────────────


def save_model(model: PgpModel, directory: Path, seed: int = 0) -> ModelArchive:
    """Write ``model.json`` plus basepoint, coordinate and theta matrices."""
    archive = ModelArchive(
        kernel=model.kernel,
        sigma_k=model.sigma_k,
        r=model.r,
        n=model.n,
        k=model.k,
        names=list(model.names),
        standardization_lo=model.standardization.lo.tolist(),
        standardization_hi=model.standardization.hi.tolist(),
        basepoint=model.basepoint_kind,
        center_snapshots=model.center_snapshots,
        seed=seed,
        max_train_norm=model.max_train_norm,
        outside_radius=model.outside_radius,
    )
    try:
        directory.mkdir(parents=True, exist_ok=True)
        write_matrix(directory / archive.basepoint_file, model.basepoint.matrix)
        write_matrix(directory / archive.coords_file, model.train_coords)
        write_matrix(directory / archive.thetas_file, model.train_thetas)
        (directory / "model.json").write_text(archive.model_dump_json(indent=2), encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write model archive {directory}: {exc}") from exc
    return archive


def load_model(directory: Path) -> PgpModel:
    """Rebuild a trained model from its archive directory.

    Raises:
        SchemaMismatch: If ``model.json`` or a matrix file is missing or malformed.
    """
    try:
        archive = ModelArchive.model_validate_json(
            (directory / "model.json").read_text(encoding="utf-8")
        )
    except FileNotFoundError as exc:
        raise SchemaMismatch(f"no model.json in {directory}") from exc
    except ValidationError as exc:
        raise SchemaMismatch(f"model.json in {directory} does not match the schema: {exc}") from exc

    basis = read_matrix(directory / archive.basepoint_file)
    coords = read_matrix(directory / archive.coords_file)
    thetas = read_matrix(directory / archive.thetas_file)
    p = archive.n * archive.r - archive.r
    if basis.shape != (archive.n, archive.r) or coords.shape != (archive.k, p):
        raise SchemaMismatch(f"model matrices in {directory} disagree with model.json")
    if thetas.shape != (archive.k, len(archive.names)):
        raise SchemaMismatch(f"training thetas in {directory} disagree with model.json")

    mu = SubspacePoint(StiefelBasis(basis))
    standardization = Standardization(
        lo=np.asarray(archive.standardization_lo), hi=np.asarray(archive.standardization_hi)
    )
    standardized = standardization.apply(thetas)
    omega, factor, jitter = _factorize(archive.kernel, standardized)
    return PgpModel(
        basepoint=mu,
        basepoint_kind=archive.basepoint,
        frame=build_lift_frame(mu),
        names=tuple(archive.names),
        train_thetas=thetas,
        standardized=standardized,
        train_coords=coords,
        kernel=archive.kernel,
        sigma_k=archive.sigma_k,
        standardization=standardization,
        omega=omega,
        omega_factor=factor,
        jitter=jitter,
        center_snapshots=archive.center_snapshots,
        max_train_norm=archive.max_train_norm,
        outside_radius=archive.outside_radius,
    )
