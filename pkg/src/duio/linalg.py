"""Dense linear-algebra primitives used throughout the library.

All routines operate on plain ``numpy`` arrays of float64.  Matrices with
zero rows or zero columns are first-class citizens: they encode absent
channels (a node without unknown inputs, a full-dimensional quotient) and
propagate through products as dimensioned zeros.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, NotPositiveDefinite, NotSymmetric


@dataclass(frozen=True)
class Tolerance:
    """Numerical thresholds shared by the rank-revealing routines.

    rel_rank_tol
        Singular values below ``rel_rank_tol * sigma_max`` count as zero.
    residual_tol
        Acceptable relative residual for factorizations and solves.
    """

    rel_rank_tol: float = 1e-9
    residual_tol: float = 1e-8

    def __post_init__(self):
        for name in ("rel_rank_tol", "residual_tol"):
            v = getattr(self, name)
            if not (0.0 < v < 1.0):
                raise ValueError(f"{name} must lie in (0, 1), got {v}")


DEFAULT_TOL = Tolerance()


def as_matrix(M, name: str = "matrix") -> np.ndarray:
    """Coerce to a 2-D float array with finite entries."""
    A = np.asarray(M, dtype=float)
    if A.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {A.shape}")
    if A.size and not np.isfinite(A).all():
        raise ValueError(f"{name} contains non-finite entries")
    return A


def as_vector(v, name: str = "vector") -> np.ndarray:
    """Coerce to a 1-D float array with finite entries."""
    a = np.asarray(v, dtype=float).reshape(-1)
    if a.size and not np.isfinite(a).all():
        raise ValueError(f"{name} contains non-finite entries")
    return a


def _require_square(M: np.ndarray, name: str) -> np.ndarray:
    if M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {M.shape}")
    return M


def _symmetrize(M: np.ndarray, tol: Tolerance, name: str) -> np.ndarray:
    # round-off asymmetry is removed up front so eigh sees an exactly
    # symmetric operand
    _require_square(M, name)
    scale = 1.0 + (np.abs(M).max() if M.size else 0.0)
    if M.size and np.abs(M - M.T).max() > tol.residual_tol * scale:
        raise NotSymmetric(f"{name} is not symmetric within tolerance")
    return (M + M.T) / 2.0


def cholesky_upper(H, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Upper-triangular S with positive diagonal such that H = S^T S.

    Raises NotPositiveDefinite as soon as a pivot falls below
    ``rel_rank_tol * ||H||_2``; when H is an aggregate normal-equations
    Hessian that failure means the underlying maps are jointly rank
    deficient.
    """
    H = _symmetrize(as_matrix(H, "H"), tol, "H")
    n = H.shape[0]
    scale = spectral_norm(H)
    S = np.zeros((n, n))
    for j in range(n):
        d = H[j, j] - S[:j, j] @ S[:j, j]
        if d <= tol.rel_rank_tol * scale:
            raise NotPositiveDefinite(
                f"pivot {d:.3e} at index {j} below {tol.rel_rank_tol:.1e} * ||H||")
        S[j, j] = np.sqrt(d)
        if j + 1 < n:
            S[j, j + 1:] = (H[j, j + 1:] - S[:j, j] @ S[:j, j + 1:]) / S[j, j]
    return S


def solve_spd(H, b, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Solve H x = b for symmetric positive-definite H."""
    S = cholesky_upper(H, tol)
    b = as_vector(b, "b")
    if b.size != S.shape[0]:
        raise DimensionMismatch(f"b has length {b.size}, expected {S.shape[0]}")
    y = scipy.linalg.solve_triangular(S, b, trans="T", lower=False)
    return scipy.linalg.solve_triangular(S, y, lower=False)


def min_eigenvalue_symmetric(M, tol: Tolerance = DEFAULT_TOL) -> float:
    """Smallest eigenvalue of a symmetric matrix."""
    M = _symmetrize(as_matrix(M, "M"), tol, "M")
    if M.shape[0] == 0:
        raise DimensionMismatch("empty matrix has no eigenvalues")
    return float(np.linalg.eigvalsh(M)[0])


def spectral_norm(M) -> float:
    """Largest singular value; zero for empty matrices."""
    M = as_matrix(M, "M")
    if 0 in M.shape:
        return 0.0
    return float(np.linalg.svd(M, compute_uv=False)[0])


def spectral_radius(M) -> float:
    """Largest eigenvalue magnitude of a square matrix; zero if 0x0."""
    M = _require_square(as_matrix(M, "M"), "M")
    if M.shape[0] == 0:
        return 0.0
    return float(np.abs(np.linalg.eigvals(M)).max())


def numerical_rank(M, tol: Tolerance = DEFAULT_TOL) -> int:
    M = as_matrix(M, "M")
    if 0 in M.shape:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(s > tol.rel_rank_tol * s[0]))


def kernel_basis(M, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis of Ker M as columns (possibly zero columns)."""
    M = as_matrix(M, "M")
    cols = M.shape[1]
    if cols == 0:
        return np.zeros((0, 0))
    if M.shape[0] == 0:
        return np.eye(cols)
    _, s, Vt = np.linalg.svd(M)
    r = int(np.sum(s > tol.rel_rank_tol * s[0])) if s.size else 0
    return Vt[r:].T.copy()


def orthonormal_columns(M, tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Orthonormal basis of the column space of M."""
    M = as_matrix(M, "M")
    if 0 in M.shape:
        return np.zeros((M.shape[0], 0))
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    r = int(np.sum(s > tol.rel_rank_tol * s[0])) if s.size else 0
    return U[:, :r].copy()
