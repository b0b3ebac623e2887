"""Plant simulation and the two-time-scale estimation loop.

A scenario bundles the plant, the per-node measurement/input split, the
communication topology, the input generators and the run parameters.
``run_scenario`` advances the plant one sample at a time; between
samples every node propagates its reduced-order estimator and the
network runs ``nu`` fusion rounds from a cold start.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DimensionMismatch, ValidationFailed
from .fusion import (FusionConfig, FusionState, build_normalizer,
                     compute_constants, normalize_T, run_fusion,
                     averaged_error_bound)
from .geometry import (ObserverDesign, build_design, check_joint_reconstructability,
                       design_from_matrices, design_residuals)
from .graph import Topology, algebraic_connectivity, degrees, is_connected
from .linalg import (DEFAULT_TOL, Tolerance, as_matrix, as_vector,
                     min_eigenvalue_symmetric, spectral_norm)
from .observer import LocalObserver


@dataclass(frozen=True)
class SystemModel:
    """Plant matrices with the per-node output and input partition.

    ``c_blocks`` stacks to C in node order; ``known_cols`` holds, per node,
    the 0-based columns of B driven by inputs that node can measure.  The
    remaining columns act as that node's unknown input channels.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    c_blocks: tuple
    known_cols: tuple

    def __post_init__(self):
        A = as_matrix(self.A, "A")
        B = as_matrix(self.B, "B")
        C = as_matrix(self.C, "C")
        n = A.shape[0]
        if A.shape != (n, n):
            raise DimensionMismatch("A must be square")
        if B.shape[0] != n or C.shape[1] != n:
            raise DimensionMismatch("B and C must match the state dimension")
        blocks = tuple(as_matrix(Ci, f"C[{i}]") for i, Ci in enumerate(self.c_blocks))
        if not blocks:
            raise ValueError("at least one node is required")
        stacked = np.vstack(blocks)
        if stacked.shape != C.shape or not np.array_equal(stacked, C):
            raise ValueError("node output blocks must stack to C in node order")
        m = B.shape[1]
        cols = []
        for i, ks in enumerate(self.known_cols):
            ks = tuple(int(k) for k in ks)
            if len(set(ks)) != len(ks):
                raise ValueError(f"node {i + 1}: duplicate known input columns")
            if any(not 0 <= k < m for k in ks):
                raise ValueError(f"node {i + 1}: known input column out of range")
            cols.append(ks)
        if len(cols) != len(blocks):
            raise DimensionMismatch("one known-input set per node is required")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "c_blocks", blocks)
        object.__setattr__(self, "known_cols", tuple(cols))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def node_count(self) -> int:
        return len(self.c_blocks)

    def C_i(self, i: int) -> np.ndarray:
        return self.c_blocks[i]

    def unknown_cols(self, i: int) -> tuple:
        known = set(self.known_cols[i])
        return tuple(k for k in range(self.m) if k not in known)

    def B_i(self, i: int) -> np.ndarray:
        return self.B[:, list(self.known_cols[i])]

    def Bbar_i(self, i: int) -> np.ndarray:
        return self.B[:, list(self.unknown_cols(i))]


def plant_step(model: SystemModel, x, u) -> np.ndarray:
    """x(t+1) = A x(t) + B u(t)."""
    x = as_vector(x, "x")
    u = as_vector(u, "u")
    if x.size != model.n or u.size != model.m:
        raise DimensionMismatch("state or input length mismatch")
    return model.A @ x + model.B @ u


def measure(model: SystemModel, x, i: int) -> np.ndarray:
    """y_i = C_i x."""
    x = as_vector(x, "x")
    if x.size != model.n:
        raise DimensionMismatch("state length mismatch")
    return model.C_i(i) @ x


def partition_input(model: SystemModel, u, i: int):
    """Split u into the node's known part and its unknown remainder."""
    u = as_vector(u, "u")
    if u.size != model.m:
        raise DimensionMismatch("input length mismatch")
    known = list(model.known_cols[i])
    unknown = list(model.unknown_cols(i))
    return u[known], u[unknown]


_SHAPES = ("sin", "cos", "constant")


@dataclass(frozen=True)
class InputChannel:
    """One scalar generator evaluated at integer sample times."""

    shape: str
    amplitude: float = 1.0
    omega: float = 0.0

    def __post_init__(self):
        if self.shape not in _SHAPES:
            raise ValueError(f"shape must be one of {_SHAPES}, got {self.shape!r}")

    def value(self, t: int) -> float:
        if self.shape == "sin":
            return self.amplitude * np.sin(self.omega * t)
        if self.shape == "cos":
            return self.amplitude * np.cos(self.omega * t)
        return self.amplitude


@dataclass(frozen=True)
class InputModel:
    channels: tuple

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(self.channels))

    def value(self, t: int) -> np.ndarray:
        return np.array([ch.value(t) for ch in self.channels])


@dataclass(frozen=True)
class SimParams:
    steps: int = 300
    nu: int = 50
    gamma: float = 0.5
    normalize: bool = False
    x0: np.ndarray | None = None
    target_radius: float = 0.5
    warm_start: bool = False
    detect_margin: float = 1e-3

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if self.nu < 1:
            raise ValueError("nu must be >= 1")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")


@dataclass(frozen=True)
class Scenario:
    system: SystemModel
    graph: Topology
    inputs: InputModel
    sim: SimParams = field(default_factory=SimParams)
    # per node: None to synthesize, or an explicit (P, L) pair
    overrides: tuple = ()

    def __post_init__(self):
        if self.graph.node_count != self.system.node_count:
            raise DimensionMismatch("topology and system disagree on node count")
        if len(self.inputs.channels) != self.system.m:
            raise DimensionMismatch("one input generator per channel is required")
        ov = tuple(self.overrides) if self.overrides else (None,) * self.system.node_count
        if len(ov) != self.system.node_count:
            raise DimensionMismatch("one override slot per node is required")
        object.__setattr__(self, "overrides", ov)

    def x0(self) -> np.ndarray:
        if self.sim.x0 is None:
            return np.zeros(self.system.n)
        x0 = as_vector(self.sim.x0, "x0")
        if x0.size != self.system.n:
            raise DimensionMismatch("x0 length mismatch")
        return x0


def build_designs(scenario: Scenario, tol: Tolerance = DEFAULT_TOL) -> list:
    """Per-node designs: explicit matrices when supplied, synthesis otherwise."""
    sysm = scenario.system
    designs = []
    for i in range(sysm.node_count):
        ov = scenario.overrides[i]
        if ov is not None:
            P, L = ov
            designs.append(design_from_matrices(sysm.A, sysm.C_i(i), P, L, tol))
        else:
            designs.append(build_design(
                sysm.A, sysm.C_i(i), sysm.B_i(i), sysm.Bbar_i(i),
                target_radius=scenario.sim.target_radius,
                detect_margin=scenario.sim.detect_margin, tol=tol))
    return designs


@dataclass(frozen=True)
class ValidationReport:
    connected: bool
    joint_ok: bool
    blind_kernel: np.ndarray
    mu: float
    lambda2: float
    K: np.ndarray
    alpha: np.ndarray
    quotient_radii: tuple
    design_failures: tuple
    failures: tuple

    @property
    def passed(self) -> bool:
        return not self.failures


def validate_scenario(scenario: Scenario, designs: list | None = None,
                      tol: Tolerance = DEFAULT_TOL) -> ValidationReport:
    """Check connectivity, joint reconstructability and design invariants."""
    sysm = scenario.system
    failures = []
    connected = is_connected(scenario.graph)
    if not connected:
        failures.append("communication graph connectivity: graph is not connected")
    if designs is None:
        designs = build_designs(scenario, tol)
    T_list = [d.T for d in designs]
    joint_ok, kernel = check_joint_reconstructability(T_list, tol)
    if not joint_ok:
        failures.append(
            "joint reconstructability: stacked [P_i; C_i] leave a "
            f"{kernel.shape[1]}-dimensional blind subspace")
    H = sum(T.T @ T for T in T_list)
    mu = min_eigenvalue_symmetric(H, tol)
    lam2 = algebraic_connectivity(scenario.graph) if connected else 0.0
    K = np.array([spectral_norm(T.T @ T) for T in T_list])
    alpha = 1.0 / (K + scenario.sim.gamma * degrees(scenario.graph))
    radii = []
    design_failures = []
    thresh = tol.residual_tol * (1.0 + spectral_norm(sysm.A))
    for i, d in enumerate(designs):
        res = design_residuals(d, sysm.A, sysm.C_i(i), sysm.Bbar_i(i))
        radii.append(res["quotient_radius"])
        # explicit matrices are often rounded; accept a looser residual there
        slack = 1.0 if scenario.overrides[i] is None else 5e-3 / tol.residual_tol
        msgs = []
        if res["decoupling"] > tol.residual_tol * slack:
            msgs.append(f"unknown-input decoupling residual {res['decoupling']:.2e}")
        if res["invariance"] > thresh * slack:
            msgs.append(f"invariance residual {res['invariance']:.2e}")
        if res["quotient_radius"] >= 1.0:
            msgs.append(f"quotient spectral radius {res['quotient_radius']:.6f} >= 1")
        if msgs:
            design_failures.append(f"node {i + 1}: " + ", ".join(msgs))
    failures.extend(design_failures)
    return ValidationReport(
        connected=connected, joint_ok=joint_ok, blind_kernel=kernel,
        mu=mu, lambda2=lam2, K=K, alpha=alpha,
        quotient_radii=tuple(radii), design_failures=tuple(design_failures),
        failures=tuple(failures))


@dataclass
class RunRecord:
    """Time-indexed truth, estimates, errors and the bound trace."""

    t: np.ndarray            # sample indices 1..steps
    x_true: np.ndarray       # (steps, n)
    estimates: np.ndarray    # (steps, N, n) last-iterate estimates
    err_last: np.ndarray     # (steps, N)
    err_avg: np.ndarray      # (steps, N) iteration-averaged error
    xi_err: np.ndarray       # (steps, N) auxiliary-measurement error
    bound: np.ndarray | None  # (steps,) averaged-error bound, None if disabled
    mu: float
    lambda2: float
    nu: int
    gamma: float
    normalize: bool

    @property
    def steps(self) -> int:
        return self.t.size

    @property
    def node_count(self) -> int:
        return self.err_last.shape[1]


def steady_state_errors(record: RunRecord, window: int = 50) -> np.ndarray:
    """Per-node median of the last ``window`` last-iterate errors."""
    w = min(window, record.steps)
    return np.median(record.err_last[-w:], axis=0)


def run_scenario(scenario: Scenario, designs: list | None = None,
                   record_bound: bool = True,
                   tol: Tolerance = DEFAULT_TOL) -> RunRecord:
    """Full two-time-scale run.

    Per sample: advance each local estimator with the previous sample's
    signals, read the new measurements, assemble xi, run ``nu`` fusion
    rounds from zero initial iterates (unless warm-starting), and record
    estimates, errors and the bound trace.
    """
    report = validate_scenario(scenario, designs, tol)
    if not report.passed:
        raise ValidationFailed(report.failures)
    if designs is None:
        designs = build_designs(scenario, tol)

    sysm = scenario.system
    sim = scenario.sim
    n, N = sysm.n, sysm.node_count
    T_list = [d.T for d in designs]
    consts = compute_constants(T_list, scenario.graph, sim.gamma, tol)

    if sim.normalize:
        norm = build_normalizer(T_list, tol)
        T_used = normalize_T(T_list, norm)
        mu_used = min_eigenvalue_symmetric(sum(T.T @ T for T in T_used), tol)
        bound_scale = spectral_norm(norm.S_inv)
        state_map = norm.S
    else:
        norm = None
        T_used = T_list
        mu_used = consts.mu
        bound_scale = 1.0
        state_map = np.eye(n)
    alpha_used = 1.0 / (np.array([spectral_norm(T.T @ T) for T in T_used])
                        + sim.gamma * degrees(scenario.graph))
    config = FusionConfig(gamma=sim.gamma, nu=sim.nu, normalize=sim.normalize,
                          warm_start=sim.warm_start)

    observers = [LocalObserver(designs[i], sysm.B_i(i)) for i in range(N)]
    x = scenario.x0()

    x_true = np.zeros((sim.steps, n))
    estimates = np.zeros((sim.steps, N, n))
    err_last = np.zeros((sim.steps, N))
    err_avg = np.zeros((sim.steps, N))
    xi_err = np.zeros((sim.steps, N))
    bound = np.zeros(sim.steps) if record_bound else None
    state = FusionState.zeros(N, n) if sim.warm_start else None

    for t in range(1, sim.steps + 1):
        u_prev = scenario.inputs.value(t - 1)
        y_prev = [measure(sysm, x, i) for i in range(N)]
        for i, obs in enumerate(observers):
            ui_prev, _ = partition_input(sysm, u_prev, i)
            obs.step(y_prev[i], ui_prev)
        x = plant_step(sysm, x, u_prev)
        xis = [observers[i].xi(measure(sysm, x, i)) for i in range(N)]
        for i in range(N):
            xi_err[t - 1, i] = np.linalg.norm(xis[i] - T_list[i] @ x)

        if not sim.warm_start:
            state = FusionState.zeros(N, n)
        result = run_fusion(xis, T_used, scenario.graph, config, state)
        last, avg = result.last, result.average
        if norm is not None:
            last = norm.denormalize(last)
            avg = norm.denormalize(avg)

        x_true[t - 1] = x
        estimates[t - 1] = last
        err_last[t - 1] = np.linalg.norm(last - x, axis=1)
        err_avg[t - 1] = np.linalg.norm(avg - x, axis=1)
        if record_bound:
            xn = float(np.linalg.norm(state_map @ x))
            if consts.lambda2 > 0:
                raw = averaged_error_bound(sim.nu, mu_used, consts.lambda2,
                                     sim.gamma, alpha_used, xn)
            else:  # single node: no consensus term
                raw = float(np.sqrt(np.sum(1.0 / alpha_used) / (sim.nu * mu_used)) * xn)
            bound[t - 1] = bound_scale * raw

    return RunRecord(
        t=np.arange(1, sim.steps + 1), x_true=x_true, estimates=estimates,
        err_last=err_last, err_avg=err_avg, xi_err=xi_err, bound=bound,
        mu=consts.mu, lambda2=consts.lambda2, nu=sim.nu, gamma=sim.gamma,
        normalize=sim.normalize)


@dataclass(frozen=True)
class ModeSummary:
    mode: str
    nu: int
    steady_state: np.ndarray
    max_steady_state: float
    mu: float
    lambda2: float
    wall_time: float


def compare_modes(scenario: Scenario, nu_list, modes=("plain", "normalized"),
                  tol: Tolerance = DEFAULT_TOL) -> list:
    """Steady-state error table over (nu, mode) pairs with shared designs."""
    for mode in modes:
        if mode not in ("plain", "normalized"):
            raise ValueError(f"unknown mode {mode!r}")
    designs = build_designs(scenario, tol)
    out = []
    for mode in modes:
        for nu in nu_list:
            sim = replace(scenario.sim, nu=int(nu), normalize=(mode == "normalized"))
            sc = replace(scenario, sim=sim)
            t0 = time.perf_counter()
            rec = run_scenario(sc, designs=designs, record_bound=False, tol=tol)
            wall = time.perf_counter() - t0
            ss = steady_state_errors(rec)
            out.append(ModeSummary(
                mode=mode, nu=int(nu), steady_state=ss,
                max_steady_state=float(ss.max()), mu=rec.mu,
                lambda2=rec.lambda2, wall_time=wall))
    return out


def reference_scenario() -> Scenario:
    """Built-in desk-scale example: a 6-state plant, three input channels,
    four sensor nodes on a ring, each blind to a different channel subset."""
    A = np.array([
        [0.9925,  0.1496,  0.0037,  0.0001,  0.0,     0.0],
        [-0.0998, 0.9925,  0.0498,  0.0024,  0.0,     0.0],
        [0.0,     0.0,     0.9928,  0.0949,  0.0,     0.0],
        [0.0,     0.0,    -0.1424,  0.8978,  0.0,     0.0],
        [0.0002, -0.0056, -0.0037,  0.0472,  0.9850, -0.1493],
        [-0.0037, 0.0744,  0.0016,  0.0049,  0.1990,  0.9850],
    ])
    B = np.array([
        [0.0037, 0.0,    0.0001],
        [0.0499, 0.0,    0.0012],
        [0.0,    0.0024, 0.0499],
        [0.0,    0.0475, -0.0036],
        [0.0497, 0.0012, -0.0038],
        [0.0069, 0.0001, 0.0498],
    ])
    C = np.array([
        [1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0, 0.0, 1.0],
    ])
    system = SystemModel(
        A=A, B=B, C=C,
        c_blocks=tuple(C[i:i + 1] for i in range(4)),
        known_cols=((1,), (0, 2), (2,), (1, 2)))
    graph = Topology(4, ((0, 1), (1, 2), (2, 3), (0, 3)))
    inputs = InputModel((
        InputChannel("sin", 1.0, 0.1),
        InputChannel("cos", 1.0, 0.5),
        InputChannel("sin", 0.5, 0.5),
    ))
    sim = SimParams(steps=300, nu=50, gamma=0.5, normalize=True,
                    x0=np.zeros(6), target_radius=0.5)
    return Scenario(system=system, graph=graph, inputs=inputs, sim=sim)
