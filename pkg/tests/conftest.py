"""Shared fixtures: the reference plant, rounded cross-check designs, helpers."""

import numpy as np
import pytest

from duio import Topology, reference_scenario

# Rounded (4-decimal) projection/gain matrices for the reference plant,
# obtained independently of the synthesis code path.  They serve as
# cross-checks: row spaces, quotient spectra and the aggregate Hessian
# eigenvalues below must be reproduced by our own synthesis.
ROUNDED_P = [
    np.zeros((0, 6)),
    np.array([[0.0984, 0.9939, -0.0491, 0.0025, 0.0, 0.0]]),
    np.array([[0.0, 0.0, 0.9987, -0.0505, 0.0, 0.0]]),
    np.array([
        [0.0, 0.0,     0.0,     1.0, 0.0,     0.0],
        [0.0, 0.0035, -0.9957,  0.0, 0.0093, -0.0923],
        [0.0, -0.0375, -0.0928, 0.0, -0.0998, 0.9900],
    ]),
]

ROUNDED_L = [
    np.zeros((6, 1)),
    np.array([[-0.2244, -0.9990, 0.0252, -0.0090, 0.4797, -2.0659]]).T,
    np.array([[0.0, 0.0, -1.9754, 0.0998, 0.0, 0.0]]).T,
    np.array([[-1.0799, 0.0809, 0.0, 0.0, 0.2710, -1.9582]]).T,
]

# Sorted eigenvalues of sum_i T_i^T T_i for the rounded designs.
REFERENCE_HESSIAN_EIGS = np.array(
    [0.0034, 0.9970, 1.0022, 1.9966, 2.9658, 3.0351])


@pytest.fixture(scope="session")
def ref_scenario():
    return reference_scenario()


@pytest.fixture(scope="session")
def ref_system(ref_scenario):
    return ref_scenario.system


@pytest.fixture(scope="session")
def rounded_T(ref_system):
    return [np.vstack([P, ref_system.C_i(i)]) for i, P in enumerate(ROUNDED_P)]


def random_connected_topology(rng, max_nodes=5):
    """Random simple connected graph with 1..max_nodes nodes."""
    N = int(rng.integers(1, max_nodes + 1))
    while True:
        edges = [(i, j) for i in range(N) for j in range(i + 1, N)
                 if rng.random() < 0.6]
        g = Topology(N, tuple(edges))
        from duio import is_connected
        if is_connected(g):
            return g


def random_well_posed_instance(rng, max_nodes=5, max_dim=6, min_mu=1e-6):
    """Random (T_list, graph) with a positive-definite aggregate Hessian."""
    g = random_connected_topology(rng, max_nodes)
    n = int(rng.integers(2, max_dim + 1))
    while True:
        Ts = [rng.normal(size=(int(rng.integers(1, n + 1)), n))
              for _ in range(g.node_count)]
        H = sum(T.T @ T for T in Ts)
        if np.linalg.eigvalsh((H + H.T) / 2)[0] > min_mu:
            return Ts, g, n
