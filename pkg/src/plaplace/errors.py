"""Exception types shared across the package."""


class PlaplaceError(Exception):
    """Base class for package errors."""


class ParameterError(PlaplaceError, ValueError):
    """Invalid parameter value. ``field`` names the offending input."""

    def __init__(self, field: str, message: str):
        super().__init__(message)
        self.field = field


class UndefinedRegimeError(PlaplaceError, ValueError):
    """A quantity was requested outside the parameter range where it exists."""


class DomainError(PlaplaceError, ValueError):
    """An argument lies outside the domain of a formula."""


class SingularityError(PlaplaceError, ValueError):
    """Evaluation at the singular point r = 0."""


class StepFailure(PlaplaceError, RuntimeError):
    """The step controller could not make progress."""


class BracketError(PlaplaceError, ValueError):
    """Bisection endpoints do not separate the two behaviours."""


class NotFoundError(PlaplaceError, RuntimeError):
    def __init__(self, message: str, max_count: int | None = None):
        super().__init__(message)
        self.max_count = max_count


class InsufficientHorizonError(PlaplaceError, RuntimeError):
    """The stored trajectory is too short for the requested accuracy."""


class ExtrapolationError(PlaplaceError, ValueError):
    """No trustworthy tail model beyond the integrated range."""


class DivergentNormError(PlaplaceError, ValueError):
    """The requested Lebesgue norm of the profile is infinite."""
