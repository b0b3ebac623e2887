"""Distributed unknown-input observers over sensor networks.

Per-node geometric synthesis of reduced-order estimators that are immune
to locally unknown inputs, consensus fusion of the partial estimates via
a linearized alternating-direction method, optional curvature
normalization through a Cholesky change of coordinates, and a
two-time-scale simulator with a CLI front end.
"""

from .errors import (DimensionMismatch, Disconnected, DuioError,
                     JointReconstructabilityViolated, NotPositiveDefinite,
                     NotStabilizable, NotSymmetric, ScenarioFormatError,
                     ValidationFailed)
from .fusion import (FusionConfig, FusionConstants, FusionResult, FusionState,
                     Normalizer, build_normalizer, centralized_solution,
                     compute_constants, ladmm_round, normalize_T, run_fusion,
                     averaged_error_bound)
from .geometry import (ObserverDesign, Subspace, build_design,
                       canonical_projection, check_joint_reconstructability,
                       design_from_matrices, design_residuals,
                       enlarge_for_detectability, friend_gain,
                       infimal_conditioned_invariant, principal_angles)
from .graph import (Topology, algebraic_connectivity, degree, degrees,
                    is_connected, laplacian)
from .linalg import (DEFAULT_TOL, Tolerance, cholesky_upper, kernel_basis,
                     min_eigenvalue_symmetric, numerical_rank,
                     orthonormal_columns, solve_spd, spectral_norm,
                     spectral_radius)
from .observer import LocalObserver, assemble_xi, observer_step
from .scenario import (InputChannel, InputModel, ModeSummary, RunRecord,
                       Scenario, SimParams, SystemModel, build_designs,
                       compare_modes, measure, partition_input, plant_step,
                       reference_scenario, run_scenario,
                       steady_state_errors, validate_scenario)

__version__ = "0.1.0"
