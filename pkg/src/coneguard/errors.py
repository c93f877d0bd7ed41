"""Exception types shared across the simulator.

Every failure mode that callers are expected to handle gets its own class so
the CLI can map them onto exit codes without string matching.
"""


class ConeguardError(Exception):
    """Base class for all package errors."""


class AttitudeSingularError(ConeguardError):
    """Euler-rate transform is singular (|cos(pitch)| below threshold)."""


class NonFiniteStateError(ConeguardError):
    """Integration produced a non-finite state component."""


class DegenerateThrustError(ConeguardError):
    """Attitude-target denominator g + z_ddot fell below the guard value."""


class DegenerateGradientError(ConeguardError):
    """A safety-constraint gradient row is (numerically) zero.

    The barrier theory guarantees a nonzero input row on the admissible
    domain, so this is surfaced loudly instead of being regularized away.
    """


class InfeasibleQpError(ConeguardError):
    """The safety QP has an empty feasible set.

    Attributes:
        blocking_labels: labels of the constraints that could not be
            satisfied simultaneously (most violated first).
    """

    def __init__(self, message, blocking_labels=()):
        super().__init__(message)
        self.blocking_labels = tuple(blocking_labels)


class IterationLimitError(ConeguardError):
    """Active-set iteration failed to converge within the iteration budget."""


class InvalidObstacleError(ConeguardError):
    """Obstacle shape is not valid for the requested barrier variant."""


class ConeDegenerateError(ConeguardError):
    """Effective half-angle is undefined (arccos argument out of range)."""


class ConfigError(ConeguardError):
    """Scenario configuration is malformed or violates an invariant."""


class SimulationAbort(ConeguardError):
    """A run aborted mid-trajectory; carries the failing step index."""

    def __init__(self, message, step_index):
        super().__init__(message)
        self.step_index = step_index
