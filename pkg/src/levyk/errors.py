"""Exception types shared across the package."""


class LevykError(Exception):
    """Base class for all package errors."""


class ValidationError(LevykError, ValueError):
    """A model or argument violates an admissibility rule.

    ``field`` names the offending config key when known.
    """

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class NumericFailure(LevykError, ArithmeticError):
    """A quadrature or series did not reach its tolerance."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class RangeError(LevykError, ValueError):
    """A query falls outside a precomputed table."""


class BoxTooSmall(LevykError):
    """Mass leaked past the spatial box of a grid computation."""

    def __init__(self, message, required_extent=None):
        super().__init__(message)
        self.required_extent = required_extent


class PreconditionFailed(LevykError):
    """An operation refused to run because a prerequisite check failed."""

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition
