"""Geometric observer synthesis.

For each node the synthesis pipeline is:

1. the infimal conditioned-invariant subspace W containing the unknown
   input image (fixed-point recursion),
2. a detectability fallback that enlarges W by unobservable quotient
   modes hugging the unit circle (they cannot be moved by any gain and
   would stall the estimator),
3. a canonical projection P with Ker P = W,
4. an output-injection ("friend") gain L that keeps W invariant under
   A + L C and places every movable quotient eigenvalue inside a target
   disk,
5. the induced quotient map A_bar with A_bar P = P (A + L C).

The stacked map T = [P; C] is what the fusion stage consumes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.signal

from .errors import DimensionMismatch, NotStabilizable
from .linalg import (DEFAULT_TOL, Tolerance, as_matrix, kernel_basis,
                     numerical_rank, orthonormal_columns, spectral_radius)


@dataclass(frozen=True)
class Subspace:
    """A subspace of R^n given by an orthonormal column basis (n x k)."""

    ambient_dim: int
    basis: np.ndarray

    def __post_init__(self):
        B = as_matrix(self.basis, "basis")
        if B.shape[0] != self.ambient_dim:
            raise DimensionMismatch(
                f"basis has {B.shape[0]} rows, ambient dim is {self.ambient_dim}")
        if B.shape[1]:
            gram = B.T @ B
            if np.abs(gram - np.eye(B.shape[1])).max() > 1e-10:
                raise ValueError("basis columns are not orthonormal")
        object.__setattr__(self, "basis", B)

    @property
    def dim(self) -> int:
        return self.basis.shape[1]


@dataclass(frozen=True)
class ObserverDesign:
    """Per-node estimator data: projection P, gain L, quotient map, stack T."""

    P: np.ndarray       # q x n, orthonormal rows (or user-supplied full row rank)
    L: np.ndarray       # n x p
    A_bar: np.ndarray   # q x q
    T: np.ndarray       # (q + p) x n, rows of P stacked over rows of C

    @property
    def q(self) -> int:
        return self.P.shape[0]


def principal_angles(U: Subspace, V: Subspace) -> np.ndarray:
    """Principal angles between two subspaces of the same ambient space.

    Uses the sine-based refinement so near-zero angles are resolved to
    machine precision instead of the sqrt(eps) floor of plain arccos.
    """
    if U.ambient_dim != V.ambient_dim:
        raise DimensionMismatch("subspaces live in different ambient spaces")
    if U.dim == 0 or V.dim == 0:
        return np.zeros(0)
    return scipy.linalg.subspace_angles(U.basis, V.basis)


def _check_dims(A, C, Bbar):
    n = A.shape[0]
    if A.shape != (n, n):
        raise DimensionMismatch(f"A must be square, got {A.shape}")
    if C.shape[1] != n:
        raise DimensionMismatch(f"C has {C.shape[1]} columns, expected {n}")
    if Bbar.shape[0] != n:
        raise DimensionMismatch(f"Bbar has {Bbar.shape[0]} rows, expected {n}")


def infimal_conditioned_invariant(A, C, Bbar,
                                  tol: Tolerance = DEFAULT_TOL) -> Subspace:
    """Smallest subspace W with Im Bbar in W and A (W ∩ Ker C) in W.

    Fixed-point recursion W_0 = Im Bbar, W_{k+1} = Im Bbar + A (W_k ∩ Ker C);
    dimensions are non-decreasing so it terminates within n steps.
    """
    A = as_matrix(A, "A")
    C = as_matrix(C, "C")
    Bbar = as_matrix(Bbar, "Bbar")
    _check_dims(A, C, Bbar)
    n = A.shape[0]
    Bb = orthonormal_columns(Bbar, tol)
    W = Bb
    for _ in range(n + 1):
        inter = W @ kernel_basis(C @ W, tol) if W.shape[1] else W
        Wn = orthonormal_columns(np.hstack([Bb, A @ inter]), tol)
        if Wn.shape[1] == W.shape[1]:
            return Subspace(n, Wn)
        W = Wn
    raise RuntimeError("subspace recursion failed to terminate")  # unreachable


def canonical_projection(W: Subspace) -> np.ndarray:
    """Full-row-rank P with orthonormal rows and Ker P = W.

    Rows follow a sign convention (largest-magnitude entry positive) so
    repeated synthesis is deterministic.
    """
    n = W.ambient_dim
    if W.dim == 0:
        return np.eye(n)
    P = kernel_basis(W.basis.T).T
    for r in range(P.shape[0]):
        if P[r, np.argmax(np.abs(P[r]))] < 0:
            P[r] = -P[r]
    return P


def _quotient_pair(A, C, W: Subspace, tol: Tolerance):
    """Projection, particular friend and the injectable quotient pair.

    Every gain preserving the invariance of W can be written
    L = P^T (Mp + Theta U0^T) + (basis of W) N, which acts on the quotient
    as A_q + Theta C_q; Theta is the remaining design freedom.
    """
    n = A.shape[0]
    P = canonical_projection(W)
    q = P.shape[0]
    p = C.shape[0]
    CW = C @ W.basis
    U0 = kernel_basis(CW.T, tol)            # output combos not used by invariance
    if W.dim:
        PAW = P @ A @ W.basis
        Mp = -PAW @ np.linalg.pinv(CW)
        resid = np.abs(Mp @ CW + PAW).max() if PAW.size else 0.0
        if resid > tol.residual_tol * (1.0 + np.abs(A).max()):
            raise ValueError("W is not conditioned invariant: no friend exists")
    else:
        Mp = np.zeros((q, p))
    L0 = P.T @ Mp
    A_q = P @ (A + L0 @ C) @ P.T
    C_q = U0.T @ C @ P.T
    return P, L0, Mp, U0, A_q, C_q


def _controllable_split(Ad, Bd, tol: Tolerance):
    """Orthonormal (Vc, Vu): controllable subspace of (Ad, Bd) and complement."""
    q = Ad.shape[0]
    if Bd.shape[1] == 0:
        return np.zeros((q, 0)), np.eye(q)
    blocks = [Bd]
    Mk = Bd
    for _ in range(q - 1):
        Mk = Ad @ Mk
        blocks.append(Mk)
    Vc = orthonormal_columns(np.hstack(blocks), tol)
    Vu = kernel_basis(Vc.T, tol) if Vc.shape[1] < q else np.zeros((q, 0))
    return Vc, Vu


def _unobservable_basis(A_q, C_q, tol: Tolerance) -> np.ndarray:
    q = A_q.shape[0]
    if q == 0:
        return np.zeros((0, 0))
    if C_q.shape[0] == 0:
        return np.eye(q)
    rows = [C_q]
    Mk = C_q
    for _ in range(q - 1):
        Mk = Mk @ A_q
        rows.append(Mk)
    return kernel_basis(np.vstack(rows), tol)


def enlarge_for_detectability(A, C, W: Subspace, margin: float = 1e-3,
                              tol: Tolerance = DEFAULT_TOL) -> Subspace:
    """Absorb practically-undetectable quotient modes into W.

    Unobservable quotient modes with 1 - margin <= |eig| < 1 are fixed under
    every admissible gain yet decay too slowly to be useful, so the subspace
    is enlarged by their preimage (which stays conditioned invariant).
    Modes at or beyond the unit circle are left alone here; friend_gain
    rejects them as undetectable.
    """
    A = as_matrix(A, "A")
    C = as_matrix(C, "C")
    if not (0.0 < margin < 1.0):
        raise ValueError(f"margin must lie in (0, 1), got {margin}")
    n = A.shape[0]
    while True:
        P, _, _, _, A_q, C_q = _quotient_pair(A, C, W, tol)
        if A_q.shape[0] == 0:
            return W
        N = _unobservable_basis(A_q, C_q, tol)
        if N.shape[1] == 0:
            return W
        An = N.T @ A_q @ N
        lam = np.linalg.eigvals(An)
        if not ((np.abs(lam) >= 1.0 - margin) & (np.abs(lam) < 1.0)).any():
            return W
        # real invariant basis of the slow block via ordered Schur
        Ts, Z, sdim = scipy.linalg.schur(
            An, output="real",
            sort=lambda re, im: 1.0 - margin <= np.hypot(re, im) < 1.0)
        slow = N @ Z[:, :sdim]
        ext = P.T @ slow
        W = Subspace(n, orthonormal_columns(np.hstack([W.basis, ext]), tol))


def _replacement_poles(lam: np.ndarray, target_radius: float) -> np.ndarray:
    """Distinct, conjugate-symmetric targets inside the disk.

    Moduli are drawn from a shrinking slot sequence so repeated input
    eigenvalues never collide, which pole placement requires.
    """
    order = np.lexsort((lam.imag, lam.real))
    lam = lam[order]
    repl = []
    slot = 0.9 * target_radius
    fallback = 1e-6          # only reached when target_radius == 0 with several poles
    i = 0
    while i < len(lam):
        lm = lam[i]
        mag = slot if slot > 0 else (0.0 if len(lam) == 1 else fallback * (i + 1))
        if abs(lm.imag) < 1e-12:
            sign = -1.0 if lm.real < 0 else 1.0
            repl.append(complex(sign * mag))
            i += 1
        else:
            th = abs(np.angle(lm))
            repl.append(mag * np.exp(1j * th))
            repl.append(mag * np.exp(-1j * th))
            i += 2
        slot *= 0.93
    return np.array(repl)


def friend_gain(A, C, W: Subspace, target_radius: float = 0.5,
                tol: Tolerance = DEFAULT_TOL) -> np.ndarray:
    """Gain L with (A + L C) W ⊆ W and a stable induced quotient map.

    Movable quotient eigenvalues outside ``target_radius`` are placed
    inside it; eigenvalues already inside are left untouched, and fixed
    (unobservable) stable modes are accepted as they are.  Raises
    NotStabilizable when a fixed mode sits on or outside the unit circle.
    """
    A = as_matrix(A, "A")
    C = as_matrix(C, "C")
    if not (0.0 <= target_radius < 1.0):
        raise ValueError(f"target_radius must lie in [0, 1), got {target_radius}")
    n = A.shape[0]
    P, L0, Mp, U0, A_q, C_q = _quotient_pair(A, C, W, tol)
    q = A_q.shape[0]
    if q == 0:
        return np.zeros((n, C.shape[0]))
    # dual pair: output injection on (C_q, A_q) == state feedback on (A_q^T, C_q^T)
    Ad, Bd = A_q.T, C_q.T
    Vc, Vu = _controllable_split(Ad, Bd, tol)
    if Vu.shape[1]:
        fixed = np.linalg.eigvals(Vu.T @ Ad @ Vu)
        if (np.abs(fixed) >= 1.0).any():
            worst = fixed[np.argmax(np.abs(fixed))]
            raise NotStabilizable(
                f"quotient pair is undetectable: fixed mode at {worst:.6g} "
                "(supply explicit P and L for this node in the scenario file)")
    if Vc.shape[1] == 0:
        return L0
    A11 = Vc.T @ Ad @ Vc
    B1 = Vc.T @ Bd
    Ts, Z, sdim = scipy.linalg.schur(
        A11, output="real",
        sort=lambda re, im: np.hypot(re, im) <= target_radius)
    nbad = A11.shape[0] - sdim
    if nbad == 0:
        return L0
    Ub = Z[:, sdim:]
    Sb = Ts[sdim:, sdim:]
    Bs = Ub.T @ B1
    repl = _replacement_poles(np.linalg.eigvals(Sb), target_radius)
    try:
        placed = scipy.signal.place_poles(Sb, Bs, repl)
    except ValueError as exc:
        raise NotStabilizable(f"pole placement on the quotient failed: {exc}")
    # feedback K acts through the slow left-invariant subspace only, so the
    # already-good eigenvalues stay where they are
    K = (placed.gain_matrix @ Ub.T) @ Vc.T
    Theta = -K.T
    M = Mp + Theta @ U0.T
    return P.T @ M


def design_from_matrices(A, C, P, L, tol: Tolerance = DEFAULT_TOL) -> ObserverDesign:
    """Assemble a design from explicit P and L (synthesized or supplied).

    The quotient map is recovered through the right pseudoinverse of P, so
    loading previously emitted matrices reproduces the synthesized design
    exactly.
    """
    A = as_matrix(A, "A")
    C = as_matrix(C, "C")
    # fix the memory layout so synthesized and re-loaded matrices follow the
    # same BLAS paths, keeping emitted designs bit-reproducible
    P = np.ascontiguousarray(as_matrix(P, "P"))
    L = np.ascontiguousarray(as_matrix(L, "L"))
    n = A.shape[0]
    if P.shape[1] != n and P.shape[0] > 0:
        raise DimensionMismatch(f"P has {P.shape[1]} columns, expected {n}")
    if P.shape[0] == 0:
        P = P.reshape(0, n)
    if L.shape != (n, C.shape[0]):
        raise DimensionMismatch(
            f"L has shape {L.shape}, expected {(n, C.shape[0])}")
    if P.shape[0] and numerical_rank(P, tol) < P.shape[0]:
        raise ValueError("P must have full row rank")
    A_bar = P @ (A + L @ C) @ np.linalg.pinv(P) if P.shape[0] else np.zeros((0, 0))
    T = np.vstack([P, C])
    return ObserverDesign(P=P, L=L, A_bar=A_bar, T=T)


def build_design(A, C, B, Bbar, target_radius: float = 0.5,
                 detect_margin: float = 1e-3,
                 tol: Tolerance = DEFAULT_TOL) -> ObserverDesign:
    """Synthesize the full per-node design from the plant data.

    Parameters
    ----------
    A, C : plant and node output matrices.
    B : known-input matrix of the node (dimension check only).
    Bbar : unknown-input matrix; may have zero columns.
    target_radius : disk for assignable quotient eigenvalues.
    detect_margin : unit-circle margin for the detectability fallback.
    """
    A = as_matrix(A, "A")
    C = as_matrix(C, "C")
    B = as_matrix(B, "B")
    Bbar = as_matrix(Bbar, "Bbar")
    _check_dims(A, C, Bbar)
    if B.shape[0] != A.shape[0]:
        raise DimensionMismatch(f"B has {B.shape[0]} rows, expected {A.shape[0]}")
    W = infimal_conditioned_invariant(A, C, Bbar, tol)
    W = enlarge_for_detectability(A, C, W, detect_margin, tol)
    P = canonical_projection(W)
    L = friend_gain(A, C, W, target_radius, tol)
    return design_from_matrices(A, C, P, L, tol)


def design_residuals(design: ObserverDesign, A, C, Bbar) -> dict:
    """Invariant diagnostics: decoupling, invariance and quotient radius."""
    A = as_matrix(A, "A")
    C = as_matrix(C, "C")
    Bbar = as_matrix(Bbar, "Bbar")
    P, L, A_bar = design.P, design.L, design.A_bar
    dec = float(np.linalg.norm(P @ Bbar)) if P.size and Bbar.size else 0.0
    inv = float(np.linalg.norm(A_bar @ P - P @ (A + L @ C))) if P.size else 0.0
    return {
        "decoupling": dec,
        "invariance": inv,
        "quotient_radius": spectral_radius(A_bar),
    }


def check_joint_reconstructability(T_list, tol: Tolerance = DEFAULT_TOL):
    """True iff the stacked maps pin down the whole state.

    Returns (ok, kernel) where kernel is an orthonormal basis of the
    common blind subspace (empty when ok).
    """
    Ts = [as_matrix(T, f"T[{i}]") for i, T in enumerate(T_list)]
    if not Ts:
        raise ValueError("T_list must not be empty")
    n = Ts[0].shape[1]
    for T in Ts:
        if T.shape[1] != n:
            raise DimensionMismatch("all T_i must have the same column count")
    stacked = np.vstack(Ts)
    ker = kernel_basis(stacked, tol)
    return ker.shape[1] == 0, ker
