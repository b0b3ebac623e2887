import numpy as np
import pytest

from duio import (DEFAULT_TOL, NotPositiveDefinite, NotSymmetric, Tolerance,
                  cholesky_upper, kernel_basis, min_eigenvalue_symmetric,
                  solve_spd, spectral_norm, spectral_radius)
from duio.linalg import as_matrix, numerical_rank, orthonormal_columns


def random_spd(rng, n, cond=None):
    Q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    d = rng.uniform(0.5, 2.0, size=n) if cond is None else \
        np.logspace(0, -np.log10(cond), n)
    return Q @ np.diag(d) @ Q.T


# --- cholesky_upper -------------------------------------------------------

def test_cholesky_identity():
    assert np.allclose(cholesky_upper(np.eye(3)), np.eye(3))


def test_cholesky_2x2_known_factor():
    H = np.array([[4.0, 2.0], [2.0, 3.0]])
    S = cholesky_upper(H)
    assert np.allclose(S, np.array([[2.0, 1.0], [0.0, np.sqrt(2.0)]]))
    # reconstruction oracle: direct multiplication
    assert np.abs(S.T @ S - H).max() <= 1e-12
    assert np.all(np.diag(S) > 0)
    assert np.allclose(S, np.triu(S))


def test_cholesky_reference_hessian(rounded_T):
    H = sum(T.T @ T for T in rounded_T)
    S = cholesky_upper(H)
    assert np.linalg.norm(S.T @ S - H) <= 1e-8 * (1 + np.linalg.norm(H))


def test_cholesky_random_spd_reconstruction():
    rng = np.random.default_rng(1)
    for _ in range(50):
        H = random_spd(rng, int(rng.integers(1, 9)))
        S = cholesky_upper(H)
        assert np.linalg.norm(S.T @ S - H) <= 1e-10 * np.linalg.norm(H)


def test_cholesky_rejects_indefinite():
    with pytest.raises(NotPositiveDefinite):
        cholesky_upper(np.array([[1.0, 2.0], [2.0, 1.0]]))


def test_cholesky_rejects_singular():
    v = np.array([[1.0, 2.0]])
    with pytest.raises(NotPositiveDefinite):
        cholesky_upper(v.T @ v)


def test_cholesky_rejects_asymmetric():
    with pytest.raises(NotSymmetric):
        cholesky_upper(np.array([[1.0, 0.5], [0.0, 1.0]]))


# --- eigenvalue quantities ------------------------------------------------

def test_min_eig_identity():
    assert min_eigenvalue_symmetric(np.eye(4)) == pytest.approx(1.0)


def test_min_eig_diagonal():
    assert min_eigenvalue_symmetric(np.diag([0.0034, 3.0351])) == \
        pytest.approx(0.0034)


def test_min_eig_reference_hessian(rounded_T):
    H = sum(T.T @ T for T in rounded_T)
    assert min_eigenvalue_symmetric(H) == pytest.approx(0.0034, abs=5e-4)


def test_min_eig_rotation_invariant():
    rng = np.random.default_rng(2)
    for _ in range(20):
        n = int(rng.integers(2, 7))
        d = rng.uniform(-3, 3, size=n)
        Q, _ = np.linalg.qr(rng.normal(size=(n, n)))
        assert min_eigenvalue_symmetric(Q.T @ np.diag(d) @ Q) == \
            pytest.approx(d.min(), abs=1e-9)


def test_min_eig_rejects_asymmetric():
    with pytest.raises(NotSymmetric):
        min_eigenvalue_symmetric(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_spectral_norm_cases(ref_system):
    assert spectral_norm(np.zeros((3, 2))) == 0.0
    assert spectral_norm(np.diag([2.0, 5.0])) == pytest.approx(5.0)
    # first node measures only the first state: T1^T T1 = diag(1, 0, ..., 0)
    T1 = np.vstack([np.zeros((0, 6)), ref_system.C_i(0)])
    assert np.allclose(T1.T @ T1, np.diag([1, 0, 0, 0, 0, 0.0]))
    assert spectral_norm(T1.T @ T1) == pytest.approx(1.0)


def test_spectral_radius_cases():
    assert spectral_radius(np.zeros((2, 2))) == 0.0
    assert spectral_radius(np.array([[0.0, 1.0], [-1.0, 0.0]])) == \
        pytest.approx(1.0)
    th = 0.7
    R = 0.5 * np.array([[np.cos(th), np.sin(th)], [-np.sin(th), np.cos(th)]])
    assert spectral_radius(R) == pytest.approx(0.5, abs=1e-9)
    assert spectral_radius(np.zeros((0, 0))) == 0.0


def test_radius_below_norm():
    rng = np.random.default_rng(3)
    for _ in range(100):
        M = rng.normal(size=(int(rng.integers(1, 7)),) * 2)
        assert spectral_radius(M) <= spectral_norm(M) + 1e-12


# --- kernels ---------------------------------------------------------------

def test_kernel_identity_empty():
    assert kernel_basis(np.eye(3)).shape == (3, 0)


def test_kernel_single_row():
    K = kernel_basis(np.array([[1.0, 0.0, 0.0]]))
    assert K.shape == (3, 2)
    # spans e2, e3: projector equals diag(0, 1, 1)
    assert np.allclose(K @ K.T, np.diag([0.0, 1.0, 1.0]))


def test_kernel_reference_stack_empty(rounded_T):
    assert kernel_basis(np.vstack(rounded_T)).shape[1] == 0


def test_kernel_contracts_random():
    rng = np.random.default_rng(4)
    for _ in range(30):
        r, c = int(rng.integers(0, 6)), int(rng.integers(1, 6))
        M = rng.normal(size=(r, c))
        if r >= 2 and c >= 2 and rng.random() < 0.5:
            M[-1] = M[0]  # force rank deficiency
        K = kernel_basis(M)
        assert K.shape == (c, c - numerical_rank(M))
        if K.shape[1]:
            assert np.abs(K.T @ K - np.eye(K.shape[1])).max() <= 1e-10
            if M.size:
                assert np.abs(M @ K).max() <= DEFAULT_TOL.residual_tol


def test_kernel_zero_columns():
    assert kernel_basis(np.zeros((3, 0))).shape == (0, 0)


# --- solve_spd --------------------------------------------------------------

def test_solve_identity():
    b = np.array([3.0, -1.0, 2.0])
    assert np.allclose(solve_spd(np.eye(3), b), b)


def test_solve_diagonal():
    assert np.allclose(solve_spd(np.diag([2.0, 4.0]), [2.0, 8.0]), [1.0, 2.0])


def test_solve_random_residual():
    rng = np.random.default_rng(5)
    H = random_spd(rng, 6)
    b = rng.normal(size=6)
    x = solve_spd(H, b)
    assert np.linalg.norm(H @ x - b) < 1e-10


# --- plumbing ----------------------------------------------------------------

def test_as_matrix_rejects_nan():
    with pytest.raises(ValueError):
        as_matrix(np.array([[np.nan, 1.0]]))


def test_tolerance_validation():
    with pytest.raises(ValueError):
        Tolerance(rel_rank_tol=0.0)
    with pytest.raises(ValueError):
        Tolerance(residual_tol=1.5)


def test_orthonormal_columns_empty_products():
    # zero-column matrices propagate through products as dimensioned zeros
    E = orthonormal_columns(np.zeros((4, 0)))
    assert E.shape == (4, 0)
    assert (np.zeros((2, 4)) @ E).shape == (2, 0)
    assert np.array_equal(E @ np.zeros((0, 3)), np.zeros((4, 3)))
