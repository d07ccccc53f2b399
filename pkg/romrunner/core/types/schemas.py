from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

KernelFamily = Literal["ard-squared-exponential", "exponential"]


class SolverConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    nx: int = Field(default=41, ge=3, description="Grid points along x")
    ny: int = Field(default=41, ge=3, description="Grid points along y")
    lx: float = Field(default=1.0, gt=0, description="Domain length along x")
    ly: float = Field(default=1.0, gt=0, description="Domain length along y")
    t_final: float = Field(default=1.0, gt=0, description="Time horizon T")
    n_snapshots: int = Field(default=60, ge=1, description="Equispaced snapshots in (0, T]")
    blob_center: tuple[float, float] = Field(
        default=(0.25, 0.5), description="Center of the Gaussian initial condition"
    )
    blob_width: float = Field(default=0.08, gt=0, description="Width of the initial blob")
    cfl_safety: float = Field(
        default=0.4, gt=0, le=1, description="Fraction of the stability bound used for dt"
    )
    dt: float | None = Field(
        default=None, gt=0, description="Explicit time step; checked against the bound"
    )
    default_velocity: tuple[float, float] = Field(
        default=(1.0, 0.0), description="Velocity used when theta does not name v1/v2"
    )
    default_diffusivity: tuple[float, float] = Field(
        default=(0.03, 0.03), description="Diffusivity used when theta does not name d1/d2"
    )


class ManifestEntry(BaseModel):
    names: list[str]
    values: list[float]
    path: str = Field(..., description="Matrix file relative to the manifest")
    n: int = Field(..., ge=1)
    n_t: int = Field(..., ge=1)
    split: Literal["train", "test"] = "train"


class DatasetManifest(BaseModel):
    """Contents of ``manifest.json`` in a dataset directory."""

    model_config = ConfigDict(extra="forbid")

    entries: list[ManifestEntry]
    solver: SolverConfig | None = None
    grid: dict[str, list[float] | list[str]] = Field(
        default_factory=dict, description="Grid description metadata"
    )
    center_snapshots: bool = Field(
        default=False, description="Whether POD mean-centers snapshots for this dataset"
    )


class KernelSpec(BaseModel):
    """Covariance over the parameter space.

    ``xi`` holds (nugget, signal, length-scale per group) for the ARD
    squared-exponential family and (amplitude, length-scale) for the
    exponential family. ``groups`` assigns each theta component to a
    length-scale group; ``None`` gives every component its own group.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    family: KernelFamily = "ard-squared-exponential"
    xi: tuple[float, ...] = (0.0, 1.0, 0.3)
    groups: tuple[int, ...] | None = None

    @model_validator(mode="after")
    def _check_layout(self) -> KernelSpec:
        if self.family == "exponential":
            if len(self.xi) != 2:
                raise ValueError("exponential kernel takes (amplitude, length-scale)")
            if self.xi[0] < 0 or self.xi[1] <= 0:
                raise ValueError("exponential kernel needs amplitude >= 0, length-scale > 0")
            return self
        if len(self.xi) < 3:
            raise ValueError("ARD kernel takes (nugget, signal, length-scales...)")
        if self.xi[0] < 0 or self.xi[1] < 0:
            raise ValueError("kernel amplitudes must be non-negative")
        if any(ell <= 0 for ell in self.xi[2:]):
            raise ValueError("kernel length-scales must be positive")
        if self.groups is not None:
            if min(self.groups) < 0 or max(self.groups) >= self.n_lengthscales:
                raise ValueError(
                    f"groups {self.groups} do not match {self.n_lengthscales} length-scales"
                )
        return self

    @property
    def n_lengthscales(self) -> int:
        return 1 if self.family == "exponential" else len(self.xi) - 2

    @property
    def lengthscales(self) -> tuple[float, ...]:
        return (self.xi[1],) if self.family == "exponential" else self.xi[2:]

    def group_map(self, dim: int) -> tuple[int, ...]:
        """Length-scale group of each of ``dim`` theta components."""
        if self.family == "exponential":
            return (0,) * dim
        groups = self.groups if self.groups is not None else tuple(range(dim))
        if len(groups) != dim or max(groups) >= self.n_lengthscales:
            raise ValueError(
                f"kernel groups {groups} do not cover {dim} parameter components"
            )
        return groups


class ModelArchive(BaseModel):
    """Contents of ``model.json`` in a trained-model directory."""

    model_config = ConfigDict(extra="forbid")

    kernel: KernelSpec
    sigma_k: float = Field(..., gt=0)
    r: int
    n: int
    k: int
    names: list[str]
    standardization_lo: list[float]
    standardization_hi: list[float]
    basepoint: str = Field(default="global-pod", description="global-pod or train:<index>")
    basepoint_file: str = "basepoint.txt"
    coords_file: str = "coords.txt"
    thetas_file: str = "thetas.txt"
    center_snapshots: bool = False
    seed: int = 0
    max_train_norm: float = Field(
        default=0.0, ge=0, description="Largest norm of the training coordinates"
    )
    outside_radius: int = Field(
        default=0, ge=0, description="Training coordinates with norm >= pi/2"
    )


class ThetaBatch(BaseModel):
    """A batch of query parameter points (``--thetas`` file for predict)."""

    model_config = ConfigDict(extra="forbid")

    names: list[str]
    values: list[list[float]]

    @model_validator(mode="after")
    def _check_widths(self) -> ThetaBatch:
        for row in self.values:
            if len(row) != len(self.names):
                raise ValueError(f"theta row {row} does not match names {self.names}")
        return self


class PredictionRecord(BaseModel):
    theta: dict[str, float]
    basis_file: str
    coords_file: str
    shrunk: bool
    variance_scale: float
    coords_norm: float


class PredictionBatch(BaseModel):
    """Contents of ``predictions.json``."""

    model_path: str
    records: list[PredictionRecord]


class MetricRecord(BaseModel):
    theta: str
    method: str
    e_f: float
    e_r: float | None = Field(default=None, description="Percent; None when e* is zero")
    e_a: float
    e_i: float
    unstable: bool = False
    shrunk: bool = False


class PairwiseWins(BaseModel):
    method_a: str
    method_b: str
    metric: str
    wins_a: int
    wins_b: int
    ties: int


class MetricSummary(BaseModel):
    """Contents of ``summary.json``."""

    n_points: int
    methods: list[str]
    means: dict[str, dict[str, float | None]]
    medians: dict[str, dict[str, float | None]]
    wins: list[PairwiseWins]
    unstable_counts: dict[str, int]
    shrunk_counts: dict[str, int]
