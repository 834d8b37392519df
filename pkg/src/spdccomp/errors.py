"""Exception types raised across the package."""


class SpdcError(Exception):
    """Base class for all package errors."""


class DomainError(SpdcError, ValueError):
    """Input outside the region where a model is valid."""


class ArgumentError(SpdcError, ValueError):
    """Malformed argument (negative length, NaN, wrong shape...)."""


class NumericError(SpdcError, ArithmeticError):
    """A numerical routine failed to converge."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class NotPhasematchableError(DomainError):
    """No real phasematched emission angle exists for the requested geometry."""

    def __init__(self, message, best_angle=None, residual=None):
        super().__init__(message)
        self.best_angle = best_angle
        self.residual = residual


class GridError(SpdcError):
    """Sampling grid too narrow to hold the integrand."""

    def __init__(self, message, suggested_halfwidth=None):
        super().__init__(message)
        self.suggested_halfwidth = suggested_halfwidth


class CompensationError(SpdcError):
    """The requested compensator cannot cancel the source's phase or delay."""
