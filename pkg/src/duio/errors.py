"""Exception types raised by the library."""


class DuioError(Exception):
    """Base class for all library errors."""


class DimensionMismatch(DuioError, ValueError):
    """Operands have incompatible shapes."""


class NotSymmetric(DuioError, ValueError):
    """A matrix required to be symmetric is not, beyond tolerance."""


class NotPositiveDefinite(DuioError, ValueError):
    """A matrix required to be positive definite has a vanishing pivot.

    When the matrix is the aggregate normal-equations Hessian, this
    signals that the nodes do not jointly reconstruct the state.
    """


class Disconnected(DuioError, ValueError):
    """The communication graph is not connected."""


class NotStabilizable(DuioError, RuntimeError):
    """The quotient observer pair has undetectable unstable modes.

    Synthesis cannot proceed; supply explicit P and L matrices for the
    offending node in the scenario file.
    """


class JointReconstructabilityViolated(DuioError, ValueError):
    """The stacked per-node maps leave a nonzero common kernel."""


class ValidationFailed(DuioError, RuntimeError):
    """A scenario failed one or more precondition checks."""

    def __init__(self, failures):
        self.failures = list(failures)
        super().__init__("; ".join(self.failures))


class ScenarioFormatError(DuioError, ValueError):
    """The scenario file does not conform to the expected schema."""
