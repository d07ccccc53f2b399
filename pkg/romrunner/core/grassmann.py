"""Subspace geometry on the Grassmann manifold G(r, n).

Points are stored through a canonical Stiefel representative. Tangent vectors
at ``span(Phi)`` are handled as lifts ``Z`` (``n x r``) and, through the lift
frame ``F``, as coordinates ``y`` in R^(nr - r) with ``Z = Mat(F^T y)``.
``vec`` and ``Mat`` stack columns (column-major), so block ``i`` of ``F``
acts on column ``i`` of ``Z``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from core.errors import (
    DegenerateData,
    DimensionMismatch,
    GramSchmidtBreakdown,
    NotHorizontal,
    SingularAlignment,
)
from core.pod import StiefelBasis, canonicalize_signs

HORIZONTAL_TOL = 1e-6
ALIGNMENT_COND_LIMIT = 1e12


@dataclass(frozen=True, eq=False)
class SubspacePoint:
    """An element of G(r, n) held through a canonical Stiefel representative.

    Equality of subspaces is geodesic distance below 1e-8, see ``same_subspace``.
    """

    representative: StiefelBasis

    @classmethod
    def from_matrix(cls, matrix: np.ndarray) -> SubspacePoint:
        """Span of the columns of any full-column-rank ``n x r`` matrix."""
        matrix = np.asarray(matrix, dtype=float)
        q, rr = linalg.qr(matrix, mode="economic")
        diag = np.diag(rr)
        if np.any(np.abs(diag) <= 1e-12 * max(1.0, float(np.abs(diag).max(initial=0.0)))):
            raise DegenerateData("columns do not span an r-dimensional subspace")
        q = q * np.where(diag < 0, -1.0, 1.0)
        return cls(StiefelBasis(canonicalize_signs(q)))

    @property
    def matrix(self) -> np.ndarray:
        return self.representative.matrix

    @property
    def n(self) -> int:
        return self.representative.n

    @property
    def r(self) -> int:
        return self.representative.r


@dataclass(frozen=True, eq=False)
class HorizontalLift:
    """Lift ``Z`` (``n x r``) of a tangent vector at ``span(basepoint)``."""

    Z: np.ndarray
    basepoint: StiefelBasis


@dataclass(frozen=True, eq=False)
class TangentCoordinates:
    y: np.ndarray
    basepoint: StiefelBasis


def _matrix_of(point: SubspacePoint | StiefelBasis | np.ndarray) -> np.ndarray:
    if isinstance(point, SubspacePoint):
        return point.matrix
    if isinstance(point, StiefelBasis):
        return point.matrix
    return np.asarray(point, dtype=float)


def _basis_of(point: SubspacePoint | StiefelBasis | np.ndarray) -> StiefelBasis:
    if isinstance(point, SubspacePoint):
        return point.representative
    if isinstance(point, StiefelBasis):
        return point
    return StiefelBasis(np.asarray(point, dtype=float))


# ── Lift frame ───────────────────────────────────────────────────────


@dataclass(frozen=True, eq=False)
class LiftFrame:
    """The ``(nr - r) x nr`` frame ``F`` attached to a basepoint basis.

    Block ``i`` holds the Gram-Schmidt orthonormalization, against
    ``phi_i``, of the standard rows ``e_j`` with ``j != argmax |phi_i|``
    taken in index order. Its ``k``-th row has the closed form
    ``(e_jk - (phi_jk / s_k) phi^(k)) / sqrt(s_(k+1) / s_k)`` where
    ``phi^(k)`` is ``phi_i`` with the entries ``j_1 .. j_(k-1)`` zeroed and
    ``s_k = ||phi^(k)||^2``. ``F`` and ``F^T`` are applied from this form in
    O(nr); ``matrix()`` materializes ``F`` for small problems.
    """

    basepoint: StiefelBasis
    order: np.ndarray  # (n - 1, r) proposal indices j_k per block
    pivot: np.ndarray  # (r,) excluded index argmax |phi_i|
    coef: np.ndarray  # (n - 1, r) phi_jk / s_k
    scale: np.ndarray  # (n - 1, r) sqrt(s_(k+1) / s_k)

    @property
    def n(self) -> int:
        return self.basepoint.n

    @property
    def r(self) -> int:
        return self.basepoint.r

    @property
    def dim(self) -> int:
        return self.n * self.r - self.r

    def block_coords(self, column: int, z: np.ndarray) -> np.ndarray:
        """Block ``column`` of ``F`` applied to ``z`` (one column of ``Z``)."""
        phi = self.basepoint.matrix[:, column]
        order = self.order[:, column]
        weighted = phi[order] * z[order]
        before = np.concatenate(([0.0], np.cumsum(weighted)[:-1]))
        tail_dot = float(phi @ z) - before
        return (z[order] - self.coef[:, column] * tail_dot) / self.scale[:, column]

    def block_lift(self, column: int, y_block: np.ndarray) -> np.ndarray:
        """Transpose of block ``column`` applied to its ``n - 1`` coordinates."""
        phi = self.basepoint.matrix[:, column]
        order = self.order[:, column]
        c = y_block / self.scale[:, column]
        running = np.cumsum(c * self.coef[:, column])
        z = np.empty(self.n)
        z[order] = c - phi[order] * running
        pivot = self.pivot[column]
        z[pivot] = -phi[pivot] * running[-1] if running.size else 0.0
        return z

    def apply(self, vec_z: np.ndarray) -> np.ndarray:
        """``F @ vec(Z)``."""
        Z = np.asarray(vec_z, dtype=float).reshape(self.n, self.r, order="F")
        return np.concatenate([self.block_coords(i, Z[:, i]) for i in range(self.r)])

    def apply_transpose(self, y: np.ndarray) -> np.ndarray:
        """``F^T @ y`` as ``vec(Z)``."""
        blocks = np.asarray(y, dtype=float).reshape(self.r, self.n - 1)
        Z = np.column_stack([self.block_lift(i, blocks[i]) for i in range(self.r)])
        return Z.reshape(-1, order="F")

    def matrix(self) -> np.ndarray:
        """Dense ``F``; O(n^2 r^2) memory, meant for verification."""
        n, r = self.n, self.r
        F = np.zeros((self.dim, n * r))
        for i in range(r):
            phi = self.basepoint.matrix[:, i]
            order = self.order[:, i]
            keep = np.ones((n - 1, n), dtype=bool)
            # Row k zeroes phi at j_1 .. j_(k-1).
            for k in range(1, n - 1):
                keep[k, order[:k]] = False
            block = -self.coef[:, i, None] * (keep * phi[None, :])
            block[np.arange(n - 1), order] += 1.0
            block /= self.scale[:, i, None]
            F[i * (n - 1) : (i + 1) * (n - 1), i * n : (i + 1) * n] = block
        return F


def build_lift_frame(basepoint: SubspacePoint | StiefelBasis | np.ndarray) -> LiftFrame:
    """Construct the lift frame of a basepoint basis.

    Raises:
        GramSchmidtBreakdown: If a proposal row becomes numerically zero.
    """
    basis = _basis_of(basepoint)
    phi_all = basis.matrix
    n, r = phi_all.shape
    order = np.empty((n - 1, r), dtype=int)
    pivot = np.empty(r, dtype=int)
    coef = np.empty((n - 1, r))
    scale = np.empty((n - 1, r))
    for i in range(r):
        phi = phi_all[:, i]
        m = int(np.argmax(np.abs(phi)))
        rest = np.delete(np.arange(n), m)
        squares = phi[rest] ** 2
        # s_k = phi_m^2 + sum_{l >= k} phi_(j_l)^2, accumulated from the tail.
        tail = phi[m] ** 2 + np.concatenate((np.cumsum(squares[::-1])[::-1], [0.0]))
        ratio = tail[1:] / tail[:-1]
        if np.any(ratio <= 1e-14):
            raise GramSchmidtBreakdown(f"proposal row vanished in block {i}")
        order[:, i] = rest
        pivot[i] = m
        coef[:, i] = phi[rest] / tail[:-1]
        scale[:, i] = np.sqrt(ratio)
    return LiftFrame(basepoint=basis, order=order, pivot=pivot, coef=coef, scale=scale)


def coords_to_lift(
    frame: LiftFrame, y: TangentCoordinates | np.ndarray
) -> HorizontalLift:
    """``Z = Mat_{n,r}(F^T y)``."""
    y = y.y if isinstance(y, TangentCoordinates) else np.asarray(y, dtype=float)
    if y.shape != (frame.dim,):
        raise DimensionMismatch(f"coordinates need length {frame.dim}, got {y.shape}")
    Z = frame.apply_transpose(y).reshape(frame.n, frame.r, order="F")
    return HorizontalLift(Z=Z, basepoint=frame.basepoint)


def lift_to_coords(frame: LiftFrame, lift: HorizontalLift | np.ndarray) -> TangentCoordinates:
    """``y = F vec(Z)``.

    Raises:
        NotHorizontal: If some ``|phi_i^T z_i|`` exceeds 1e-6.
    """
    Z = lift.Z if isinstance(lift, HorizontalLift) else np.asarray(lift, dtype=float)
    if Z.shape != (frame.n, frame.r):
        raise DimensionMismatch(f"lift must be {frame.n}x{frame.r}, got {Z.shape}")
    diagonal = np.einsum("ij,ij->j", Z, frame.basepoint.matrix)
    if np.max(np.abs(diagonal)) > HORIZONTAL_TOL:
        raise NotHorizontal(
            f"lift violates phi_i^T z_i = 0 (max {np.max(np.abs(diagonal)):.2e})"
        )
    return TangentCoordinates(y=frame.apply(Z.reshape(-1, order="F")), basepoint=frame.basepoint)


# ── Exponential and logarithm maps ───────────────────────────────────


def exp_map(
    basepoint: SubspacePoint | StiefelBasis | np.ndarray, lift: HorizontalLift | np.ndarray
) -> SubspacePoint:
    """``span(Phi V cos(S) + U sin(S))`` for the thin SVD ``Z = U S V^T``.

    The result is re-orthonormalized (QR, positive diagonal) and
    sign-canonicalized, so the Stiefel invariant holds even for lifts that
    are only columnwise orthogonal to the basepoint.
    """
    phi = _matrix_of(basepoint)
    Z = lift.Z if isinstance(lift, HorizontalLift) else np.asarray(lift, dtype=float)
    if Z.shape != phi.shape:
        raise DimensionMismatch(f"lift {Z.shape} does not match basepoint {phi.shape}")
    u, s, vt = linalg.svd(Z, full_matrices=False)
    moved = (phi @ vt.T) * np.cos(s) + u * np.sin(s)
    return SubspacePoint.from_matrix(moved)


def log_map(
    origin: SubspacePoint | StiefelBasis | np.ndarray,
    target: SubspacePoint | StiefelBasis | np.ndarray,
) -> HorizontalLift:
    """Lift at ``origin`` of the geodesic reaching ``target``.

    ``Z = U arctan(S) V^T`` for the thin SVD of ``Phi1 (Phi0^T Phi1)^-1 - Phi0``.

    Raises:
        SingularAlignment: If ``Phi0^T Phi1`` has condition number above 1e12.
    """
    basis0 = _basis_of(origin)
    phi0, phi1 = basis0.matrix, _matrix_of(target)
    if phi0.shape != phi1.shape:
        raise DimensionMismatch(f"bases differ in shape: {phi0.shape} vs {phi1.shape}")
    alignment = phi0.T @ phi1
    cond = np.linalg.cond(alignment)
    if not np.isfinite(cond) or cond > ALIGNMENT_COND_LIMIT:
        raise SingularAlignment(
            f"Phi0^T Phi1 is numerically singular (condition number {cond:.2e})"
        )
    # (Phi1 - Phi0 M) M^-1 keeps the result orthogonal to Phi0 to rounding.
    residual = phi1 - phi0 @ alignment
    tangent = linalg.solve(alignment.T, residual.T).T
    u, s, vt = linalg.svd(tangent, full_matrices=False)
    return HorizontalLift(Z=(u * np.arctan(s)) @ vt, basepoint=basis0)


# ── Distances ────────────────────────────────────────────────────────


def principal_angles(
    p: SubspacePoint | StiefelBasis | np.ndarray, q: SubspacePoint | StiefelBasis | np.ndarray
) -> np.ndarray:
    """Principal angles between two subspaces, non-decreasing.

    Angles are ``arccos`` of the singular values of ``Phi_p^T Phi_q``; angles
    whose cosine exceeds 1/sqrt(2) are taken from the sines (singular values
    of ``Phi_q - Phi_p Phi_p^T Phi_q``) to keep small angles accurate.
    """
    a, b = _matrix_of(p), _matrix_of(q)
    if a.shape != b.shape:
        raise DimensionMismatch(f"subspaces differ in shape: {a.shape} vs {b.shape}")
    cross = a.T @ b
    cosines = np.clip(linalg.svd(cross, compute_uv=False), 0.0, 1.0)
    sines = np.clip(np.sort(linalg.svd(b - a @ cross, compute_uv=False)), 0.0, 1.0)
    angles = np.where(cosines**2 >= 0.5, np.arcsin(sines), np.arccos(cosines))
    return np.sort(angles)


def geodesic_distance(
    p: SubspacePoint | StiefelBasis | np.ndarray, q: SubspacePoint | StiefelBasis | np.ndarray
) -> float:
    return float(np.sqrt(np.sum(principal_angles(p, q) ** 2)))


def same_subspace(p: SubspacePoint, q: SubspacePoint, tol: float = 1e-8) -> bool:
    return geodesic_distance(p, q) < tol


def shrink_to_ball(y: np.ndarray, radius: float = np.pi / 2) -> tuple[np.ndarray, bool]:
    """Project ``y`` onto the sphere of ``radius`` when it lies outside."""
    norm = float(np.linalg.norm(y))
    if norm > radius:
        return y * (radius / norm), True
    return y, False
