"""Exception types shared across the package."""


class LPError(Exception):
    """Base class for errors raised by lpstat."""


class DataError(LPError, ValueError):
    """Input data cannot be used: empty, malformed, or degenerate."""


class NumericalError(LPError, RuntimeError):
    """An iterative computation failed to converge."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
