"""Error hierarchy shared by the numerical core and the command layer.

Every error carries the process exit code the CLI reports for it, so the
command layer only has to catch ``RomError`` once.
"""

from __future__ import annotations


class RomError(Exception):
    """Root of all errors raised by this package."""

    exit_code: int = 1


# ── Validation (exit 2) ──────────────────────────────────────────────


class ValidationFailure(RomError):
    """Input, configuration or file content failed validation."""

    exit_code = 2


class ConfigError(ValidationFailure):
    pass


class NonPositiveDiffusivity(ValidationFailure):
    pass


class UnstableScheme(ValidationFailure):
    """Explicit time step exceeds the stability bound of the scheme."""


class EmptyGrid(ValidationFailure):
    pass


class RankTooLarge(ValidationFailure):
    pass


class DimensionMismatch(ValidationFailure):
    pass


class SchemaMismatch(ValidationFailure):
    """A manifest, matrix file or batch file does not match its declared schema."""


class DuplicateParameter(ValidationFailure):
    pass


class NotHorizontal(ValidationFailure):
    """A lift violates the columnwise orthogonality phi_i^T z_i = 0."""


# ── Numerical failures (exit 3) ──────────────────────────────────────


class NumericalFailure(RomError):
    exit_code = 3


class DegenerateData(NumericalFailure):
    pass


class GramSchmidtBreakdown(NumericalFailure):
    pass


class SingularAlignment(NumericalFailure):
    """Phi0^T Phi1 is numerically singular: the subspaces are too far apart."""


class IllConditionedKernel(NumericalFailure):
    pass


class OptimizationFailed(NumericalFailure):
    pass


class ZeroOptimalError(NumericalFailure):
    """The per-parameter optimal POD error is zero, so e_R is undefined."""


# ── IO (exit 4) ──────────────────────────────────────────────────────


class IoFailure(RomError):
    exit_code = 4


# ── Warnings ─────────────────────────────────────────────────────────


class InstabilityWarning(UserWarning):
    """Interpolated lift left the injectivity radius and was shrunk."""
