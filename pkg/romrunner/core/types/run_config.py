"""Run configuration: the TOML file every command reads.

Unknown keys are rejected at every level so typos fail before any work.
"""

from __future__ import annotations

import hashlib

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from config import settings
from core.errors import ConfigError, IoFailure
from core.interpolation import InterpolationConfig
from core.types.schemas import KernelSpec, SolverConfig

MethodName = Literal["pgp", "interp", "global-pod", "oracle"]


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GridSection(_Section):
    names: list[str] = Field(default_factory=lambda: ["d1", "d2"])
    lo: list[float] = Field(default_factory=lambda: [0.01, 0.01])
    hi: list[float] = Field(default_factory=lambda: [0.05, 0.05])
    step: list[float] = Field(default_factory=lambda: [0.004, 0.004])

    @model_validator(mode="after")
    def _check_lengths(self) -> GridSection:
        if not len(self.names) == len(self.lo) == len(self.hi) == len(self.step):
            raise ValueError("grid names, lo, hi and step must have equal lengths")
        return self


class SplitSection(_Section):
    train_step: list[float] = Field(
        default_factory=lambda: [0.02, 0.02],
        description="Training points sit on this coarser lattice; empty marks every point",
    )


class PodSection(_Section):
    r: int = Field(default=5, ge=1)
    energy: float | None = Field(
        default=None,
        gt=0,
        le=1,
        description="When set, r is the smallest rank capturing this energy fraction",
    )
    center: bool = False


class PgpSection(_Section):
    kernel: KernelSpec = Field(
        default_factory=lambda: KernelSpec(xi=(0.1, 1.0, 0.3, 0.3))
    )
    sigma_k: float = Field(default=1.0, gt=0)
    fit: bool = True
    fit_nugget: bool = True
    gamma: float = Field(default=0.0, ge=0)
    restarts: int = Field(default=8, ge=1)
    basepoint: int | Literal["global-pod"] = "global-pod"


class EvaluationSection(_Section):
    methods: list[MethodName] = Field(default_factory=lambda: ["pgp", "interp", "global-pod"])
    protocol: Literal["holdout", "loocv"] = "holdout"


class UqSection(_Section):
    samples: int = Field(default=1000, ge=2)
    grid: GridSection | None = Field(
        default=None, description="Query grid; None reuses the dataset grid"
    )


class StudySection(_Section):
    gammas: list[float] = Field(default_factory=lambda: [0.0, 500.0, 1000.0, 1500.0, 2000.0])
    ranks: list[int] = Field(default_factory=lambda: [5])
    uq: bool = True


class PathsSection(_Section):
    dataset: Path | None = None
    model: Path | None = None
    thetas: Path | None = None


class RunConfig(_Section):
    seed: int = Field(default_factory=lambda: settings.default_seed)
    threads: int = Field(default_factory=lambda: settings.default_threads, ge=1)
    solver: SolverConfig = Field(default_factory=SolverConfig)
    grid: GridSection = Field(default_factory=GridSection)
    split: SplitSection = Field(default_factory=SplitSection)
    pod: PodSection = Field(default_factory=PodSection)
    pgp: PgpSection = Field(default_factory=PgpSection)
    interp: InterpolationConfig = Field(default_factory=InterpolationConfig)
    evaluation: EvaluationSection = Field(default_factory=EvaluationSection)
    uq: UqSection = Field(default_factory=UqSection)
    study: StudySection = Field(default_factory=StudySection)
    paths: PathsSection = Field(default_factory=PathsSection)

    def digest(self) -> str:
        """Short hash naming the run directory of this configuration."""
        canonical = self.model_dump_json(exclude={"threads"})
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:12]


def load_run_config(path: Path | None, overrides: dict[str, Any] | None = None) -> RunConfig:
    """Parse a TOML run config and apply dotted-key overrides (flags win).

    Raises:
        ConfigError: If the file does not validate.
        IoFailure: If the file cannot be read.
    """
    raw: dict[str, Any] = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                raw = tomllib.load(fh)
        except FileNotFoundError as exc:
            raise IoFailure(f"config file {path} does not exist") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid TOML: {exc}") from exc
        except OSError as exc:
            raise IoFailure(f"cannot read config file {path}: {exc}") from exc

    for dotted, value in (overrides or {}).items():
        if value is None:
            continue
        node = raw
        *parents, leaf = dotted.split(".")
        for key in parents:
            node = node.setdefault(key, {})
        node[leaf] = value

    try:
        return RunConfig.model_validate(raw)
    except ValidationError as exc:
        raise ConfigError(f"invalid run configuration: {exc}") from exc
