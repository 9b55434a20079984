"""Exception hierarchy for qhjtraj.

Every failure mode callers are expected to handle gets its own class so the
CLI can map them onto exit codes and name the violated constraint.
"""


class QhjError(Exception):
    """Base class for all qhjtraj errors."""


class PreconditionError(QhjError):
    """An operation was called with inputs violating a documented precondition."""


class UnsupportedEnergyError(PreconditionError):
    """Energy outside the supported regime (E < 0 free-particle bases)."""


class IntegrationFailureError(QhjError):
    """A numerical integration failed a quality gate (e.g. Wronskian drift)."""


class TurningPointError(QhjError):
    """E - V(x) fell below the configured floor where E > V is required."""

    def __init__(self, x, margin):
        self.x = float(x)
        self.margin = float(margin)
        super().__init__(
            f"classically forbidden point at x = {self.x:.6g} (E - V = {self.margin:.3g})"
        )


class StencilInconsistencyError(QhjError):
    """Energy-stencil members disagree on held-fixed constants, grid or branch."""


class SingularConfigurationError(QhjError):
    """A closed-form expression was evaluated at a singular parameter set."""


class SingularVelocityError(QhjError):
    """A velocity required as a divisor is numerically zero."""


class DomainError(QhjError):
    """A lookup point falls outside the range covered by the data."""


class NoMatchError(QhjError):
    """Constant matching across a basis change failed to converge."""


class AlignmentError(QhjError):
    """Trajectories passed to a comparison do not share a usable x range."""


class ConfigError(QhjError):
    """Scenario configuration is invalid; message names field and constraint."""
