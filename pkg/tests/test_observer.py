import numpy as np
import pytest

from duio import (DimensionMismatch, LocalObserver, assemble_xi, build_design,
                  design_from_matrices, observer_step, spectral_norm)


def deadbeat_design():
    # scalar plant 0.5, full measurement, no unknown input: L = -0.5, A_bar = 0
    A = np.array([[0.5]])
    C = np.array([[1.0]])
    return build_design(A, C, np.zeros((1, 0)), np.zeros((1, 0)),
                        target_radius=0.0), A, C


def test_zero_everything_stays_zero():
    d, _, _ = deadbeat_design()
    obs = LocalObserver(d, np.zeros((1, 0)))
    s = obs.step(np.zeros(1), np.zeros(0))
    assert np.array_equal(s, np.zeros(1))


def test_zero_row_projection_is_noop(ref_system):
    d = build_design(ref_system.A, ref_system.C_i(0), ref_system.B_i(0),
                     ref_system.Bbar_i(0))
    assert d.q == 0
    obs = LocalObserver(d, ref_system.B_i(0))
    s = obs.step(np.array([3.0]), np.array([0.7]))
    assert s.shape == (0,)
    assert obs.xi(np.array([3.0])).tolist() == [3.0]


def test_scalar_deadbeat_error_dies_in_one_step():
    d, A, C = deadbeat_design()
    assert np.allclose(d.L, [[-0.5]])
    assert np.abs(d.A_bar).max() < 1e-12
    obs = LocalObserver(d, np.zeros((1, 0)))
    x = np.array([2.0])
    # s(1) = A_bar*0 - P L y(0) = 0.5 * y(0)
    s1 = obs.step(C @ x, np.zeros(0))
    assert s1 == pytest.approx(0.5 * (C @ x))
    # after one step the error e = s - P x is exactly zero
    x = A @ x
    assert np.abs(s1 - d.P @ x).max() < 1e-12


def test_xi_ordering():
    d = design_from_matrices(np.eye(3) * 0.1, np.array([[0, 1.0, 0], [0, 0, 1.0]]),
                             np.array([[1.0, 0, 0]]), np.zeros((3, 2)))
    obs = LocalObserver(d, np.zeros((3, 0)), s0=[1.0])
    assert obs.xi(np.array([2.0, 3.0])).tolist() == [1.0, 2.0, 3.0]


def test_xi_empty_s():
    d = design_from_matrices(np.eye(1) * 0.1, np.eye(1),
                             np.zeros((0, 1)), np.zeros((1, 1)))
    obs = LocalObserver(d, np.zeros((1, 0)))
    assert obs.xi(np.array([7.0])).tolist() == [7.0]


def test_functional_aliases():
    d, _, C = deadbeat_design()
    obs = LocalObserver(d, np.zeros((1, 0)))
    s = observer_step(obs, np.array([4.0]), np.zeros(0))
    assert s == pytest.approx([2.0])
    assert assemble_xi(obs, np.array([1.0])).tolist() == [2.0, 1.0]


def test_dimension_checks():
    d, _, _ = deadbeat_design()
    obs = LocalObserver(d, np.zeros((1, 0)))
    with pytest.raises(DimensionMismatch):
        obs.step(np.zeros(2), np.zeros(0))
    with pytest.raises(DimensionMismatch):
        obs.step(np.zeros(1), np.zeros(3))


def _simulate_error(design, system_i, steps, x0, u_fn, rng=None):
    """Plant + observer co-simulation; returns per-step ||s - P x||."""
    A, B, C_i, B_i, Bbar_i = system_i
    obs = LocalObserver(design, B_i)
    x = x0.copy()
    errs = [np.linalg.norm(obs.s - design.P @ x)]
    xis = []
    for t in range(steps):
        u = u_fn(t)
        known = u[: B_i.shape[1]]
        obs.step(C_i @ x, known)
        x = A @ x + B @ u
        errs.append(np.linalg.norm(obs.s - design.P @ x))
        xis.append(np.linalg.norm(obs.xi(C_i @ x) - design.T @ x))
    return np.array(errs), np.array(xis), x


def test_error_recursion_contracts_and_ignores_unknown_input(ref_system):
    # node 4 of the reference plant: nonzero quotient, one unknown channel
    i = 3
    d = build_design(ref_system.A, ref_system.C_i(i), ref_system.B_i(i),
                     ref_system.Bbar_i(i))
    # permute inputs so the node's known channels come first
    cols = list(ref_system.known_cols[i]) + list(ref_system.unknown_cols(i))
    B_perm = ref_system.B[:, cols]
    sys_i = (ref_system.A, B_perm, ref_system.C_i(i), ref_system.B_i(i),
             ref_system.Bbar_i(i))
    rng = np.random.default_rng(31)
    x0 = rng.normal(size=6)
    U = rng.normal(size=(200, 3))

    errs, _, _ = _simulate_error(d, sys_i, 200, x0, lambda t: U[t])
    nrm = spectral_norm(d.A_bar)
    e0 = errs[0]
    for t, e in enumerate(errs):
        assert e <= (nrm ** t) * e0 * (1 + 1e-9)
    assert errs[-1] < errs[0] * (nrm ** 199) + 1e-12

    # unknown channel scaled x10, known channels untouched: identical errors
    scale = np.array([1.0, 1.0, 10.0])
    errs2, _, _ = _simulate_error(d, sys_i, 200, x0, lambda t: U[t] * scale)
    assert np.abs(errs2 - errs).max() < 1e-9


def test_xi_converges_geometrically_known_inputs_only(ref_system):
    # node 2 driven only through its known channels
    i = 1
    d = build_design(ref_system.A, ref_system.C_i(i), ref_system.B_i(i),
                     ref_system.Bbar_i(i))
    obs = LocalObserver(d, ref_system.B_i(i))
    rng = np.random.default_rng(32)
    x = rng.normal(size=6)
    gaps = []
    for t in range(60):
        u_known = rng.normal(size=ref_system.B_i(i).shape[1])
        obs.step(ref_system.C_i(i) @ x, u_known)
        x = ref_system.A @ x + ref_system.B_i(i) @ u_known
        gaps.append(np.linalg.norm(obs.xi(ref_system.C_i(i) @ x) - d.T @ x))
    gaps = np.array(gaps)
    rho = max(np.abs(np.linalg.eigvals(d.A_bar)))
    # geometric decay at the quotient rate (node 2 quotient is fast)
    assert rho < 0.1
    assert gaps[10:].max() <= gaps[0] * rho ** 8 + 1e-12
