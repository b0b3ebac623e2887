import numpy as np
import pytest
from dataclasses import replace

from duio import (InputChannel, InputModel, Scenario, SimParams, SystemModel,
                  Topology, ValidationFailed, build_designs, compare_modes,
                  measure, partition_input, plant_step, run_scenario,
                  steady_state_errors, validate_scenario)


def make_consistent_scenario(steps=100, nu=200, normalize=True):
    """Two nodes, all inputs known everywhere: a consistent least-squares run."""
    rng = np.random.default_rng(51)
    n = 4
    A = rng.normal(size=(n, n))
    A *= 0.6 / max(np.abs(np.linalg.eigvals(A)))
    B = rng.normal(size=(n, 2)) * 0.1
    C = np.eye(n)[:2]
    system = SystemModel(A=A, B=B, C=C,
                         c_blocks=(C[0:1], C[1:2]),
                         known_cols=((0, 1), (0, 1)))
    graph = Topology(2, ((0, 1),))
    inputs = InputModel((InputChannel("sin", 1.0, 0.3),
                         InputChannel("cos", 0.7, 0.9)))
    sim = SimParams(steps=steps, nu=nu, gamma=0.5, normalize=normalize,
                    x0=np.ones(n))
    return Scenario(system=system, graph=graph, inputs=inputs, sim=sim)


# --- plant primitives -------------------------------------------------------

def test_plant_step_zero(ref_system):
    assert np.array_equal(plant_step(ref_system, np.zeros(6), np.zeros(3)),
                          np.zeros(6))


def test_plant_step_identity_hold():
    system = SystemModel(A=np.eye(2), B=np.zeros((2, 1)),
                         C=np.eye(2)[:1], c_blocks=(np.eye(2)[:1],),
                         known_cols=((0,),))
    x = np.array([1.5, -2.0])
    assert np.array_equal(plant_step(system, x, np.array([3.0])), x)


def test_plant_step_first_column(ref_system):
    x1 = plant_step(ref_system, np.eye(6)[0], np.zeros(3))
    assert np.allclose(x1, ref_system.A[:, 0])


def test_measure(ref_system):
    x = np.arange(1.0, 7.0)
    assert measure(ref_system, x, 0) == pytest.approx([1.0])
    assert measure(ref_system, x, 3) == pytest.approx([4.0 + 6.0])


def test_partition_all_known():
    sc = make_consistent_scenario()
    u = np.array([0.3, -0.8])
    ui, ub = partition_input(sc.system, u, 0)
    assert np.array_equal(ui, u)
    assert ub.shape == (0,)


def test_partition_reference_nodes(ref_system):
    u = np.array([10.0, 20.0, 30.0])   # channels a, b, c
    u1, ub1 = partition_input(ref_system, u, 0)
    assert u1.tolist() == [20.0]            # node 1 knows channel b
    assert ub1.tolist() == [10.0, 30.0]
    u4, ub4 = partition_input(ref_system, u, 3)
    assert u4.tolist() == [20.0, 30.0]      # node 4 knows channels b, c
    assert ub4.tolist() == [10.0]


def test_reassembly_exact(ref_system):
    rng = np.random.default_rng(52)
    for _ in range(20):
        u = rng.normal(size=3)
        full = ref_system.B @ u
        for i in range(4):
            ui, ub = partition_input(ref_system, u, i)
            again = ref_system.B_i(i) @ ui + ref_system.Bbar_i(i) @ ub
            assert np.abs(full - again).max() <= 1e-14


def test_system_model_validation():
    with pytest.raises(ValueError):
        SystemModel(A=np.eye(2), B=np.zeros((2, 1)), C=np.eye(2),
                    c_blocks=(np.eye(2)[1:], np.eye(2)[:1]),   # wrong order
                    known_cols=((0,), (0,)))


# --- the two-time-scale loop ---------------------------------------------------

def test_consistent_scenario_errors_vanish():
    sc = make_consistent_scenario(steps=100, nu=200, normalize=True)
    rec = run_scenario(sc)
    assert rec.err_last[-1].max() < 1e-9


def test_reference_run_shape_and_levels(ref_scenario):
    rec = run_scenario(ref_scenario)
    assert rec.err_last.shape == (300, 4)
    assert rec.bound.shape == (300,)
    ss = steady_state_errors(rec)
    assert ss.shape == (4,)
    assert ss.max() <= 1e-3


def test_unknown_input_immunity_reference(ref_scenario):
    rec1 = run_scenario(ref_scenario, record_bound=False)
    scaled = InputModel(tuple(
        InputChannel(ch.shape, ch.amplitude * 10.0, ch.omega)
        for ch in ref_scenario.inputs.channels))
    rec2 = run_scenario(replace(ref_scenario, inputs=scaled),
                          record_bound=False)
    assert np.abs(rec1.xi_err - rec2.xi_err).max() < 1e-9


def test_bound_dominates_average_error_when_xi_converged(ref_scenario):
    for normalize in (False, True):
        sc = replace(ref_scenario, sim=replace(ref_scenario.sim,
                                               normalize=normalize, nu=50))
        rec = run_scenario(sc)
        converged = rec.xi_err.max(axis=1) < 1e-9
        assert converged.any()
        assert np.all(rec.err_avg[converged].max(axis=1) <= rec.bound[converged])


def test_steady_state_non_increasing_in_nu(ref_scenario):
    prev = None
    for nu in (10, 50, 200, 1000):
        sc = replace(ref_scenario, sim=replace(ref_scenario.sim, nu=nu))
        rec = run_scenario(sc, record_bound=False)
        ss = steady_state_errors(rec).max()
        if prev is not None:
            # allow the float floor once errors reach ~1e-14
            assert ss <= prev + 1e-12
        prev = ss


def test_warm_start_runs_and_differs(ref_scenario):
    sim = replace(ref_scenario.sim, steps=40, warm_start=True)
    rec_w = run_scenario(replace(ref_scenario, sim=sim), record_bound=False)
    sim = replace(ref_scenario.sim, steps=40, warm_start=False)
    rec_c = run_scenario(replace(ref_scenario, sim=sim), record_bound=False)
    assert rec_w.err_last.shape == rec_c.err_last.shape
    assert not np.array_equal(rec_w.err_last, rec_c.err_last)


def test_validation_failure_disconnected(ref_scenario):
    sc = replace(ref_scenario, graph=Topology(4, ((0, 1), (2, 3))))
    with pytest.raises(ValidationFailed, match="connect"):
        run_scenario(sc)


def test_validation_failure_blind_nodes():
    A = np.diag([0.5, 0.5])
    B = np.array([[0.0], [1.0]])
    C = np.array([[1.0, 0.0], [1.0, 0.0]])
    system = SystemModel(A=A, B=B, C=C,
                         c_blocks=(C[0:1], C[1:2]),
                         known_cols=((), ()))
    sc = Scenario(system=system, graph=Topology(2, ((0, 1),)),
                  inputs=InputModel((InputChannel("constant", 0.3),)),
                  sim=SimParams(steps=10, nu=5))
    report = validate_scenario(sc)
    assert not report.passed
    assert any("reconstructability" in f for f in report.failures)
    with pytest.raises(ValidationFailed, match="reconstructability"):
        run_scenario(sc)


def test_validate_reference_quantities(ref_scenario):
    report = validate_scenario(ref_scenario)
    assert report.passed
    assert report.mu == pytest.approx(0.0034, abs=5e-4)
    assert report.lambda2 == pytest.approx(2.0)
    assert report.K[0] == pytest.approx(1.0)
    assert report.alpha[0] == pytest.approx(0.5)
    assert all(r < 1.0 for r in report.quotient_radii)


def test_compare_modes_reports(ref_scenario):
    sc = replace(ref_scenario, sim=replace(ref_scenario.sim, steps=60))
    rows = compare_modes(sc, [5, 10], modes=("normalized",))
    assert len(rows) == 2
    assert rows[0].mode == "normalized"
    assert rows[0].nu == 5 and rows[1].nu == 10
    assert rows[0].mu == pytest.approx(0.0034, abs=5e-4)
    assert rows[1].max_steady_state <= rows[0].max_steady_state + 1e-12


def test_compare_modes_rejects_unknown_mode(ref_scenario):
    with pytest.raises(ValueError):
        compare_modes(ref_scenario, [5], modes=("fancy",))


def test_input_channel_shapes():
    assert InputChannel("sin", 2.0, 0.5).value(3) == pytest.approx(
        2.0 * np.sin(1.5))
    assert InputChannel("cos", 1.0, 0.5).value(2) == pytest.approx(np.cos(1.0))
    assert InputChannel("constant", 0.7).value(123) == 0.7
    with pytest.raises(ValueError):
        InputChannel("square", 1.0, 0.1)
