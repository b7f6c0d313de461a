"""Exception and warning types shared across the solver."""


class PgdError(Exception):
    """Base class for all solver errors."""


class DataError(PgdError, ValueError):
    """Invalid input data (profiles, scenarios)."""


class NonIncreasingBreakpoints(DataError):
    """Segment ends must be strictly increasing."""


class NegativeDensity(DataError):
    """Densities must be nonnegative (zeros are floored, negatives rejected)."""


class NonPositiveBoundaryVelocity(DataError):
    """Inflow velocities must be strictly positive."""


class NegativeArgument(DataError):
    """Operation called with a negative space/time argument."""


class SchemaError(DataError):
    """Scenario file does not match the expected schema."""

    def __init__(self, path: str, message: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if message else path)


class NumericError(PgdError):
    """Numerical procedure could not complete."""


class ExceptionalPoint(NumericError):
    """Characteristic queried at a fan center, where no single value exists."""


class UndefinedAtRarefactionCenter(NumericError):
    """Velocity queried at t=0, the apex of every rarefaction fan."""


class PathLost(NumericError):
    """Shock continuation found no jump inside the search window."""


class QuadratureNotConverged(NumericError):
    """Adaptive quadrature failed to reach the requested tolerance."""


class NonCompactScenario(NumericError):
    """Balance check needs effectively compact initial mass."""


class EventQueueOverflow(NumericError):
    """Particle simulation exceeded its event budget."""


class WindowTooCoarse(UserWarning):
    """Advisory: adjacent jumps may have merged at scan resolution."""
