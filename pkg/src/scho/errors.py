"""Exception hierarchy shared by all solver modules."""


class SchoError(Exception):
    """Base class for every error raised by the package."""


class ConfigurationError(SchoError, ValueError):
    """Invalid grid, parameters or run configuration."""


class PreconditionError(SchoError, ValueError):
    """An operation was called with inputs that violate its contract."""


class NumericalBreakdown(SchoError, ArithmeticError):
    """Non-finite values appeared during an iteration."""


class SolverFailure(SchoError, RuntimeError):
    """A linear solve did not converge inside a time step.

    ``step`` carries the time-step index (forward or backward) when known.
    """

    def __init__(self, message, step=None):
        super().__init__(message if step is None else f"step {step}: {message}")
        self.step = step


class FieldFormatError(SchoError, ValueError):
    """Malformed, truncated or incompatible field file."""
