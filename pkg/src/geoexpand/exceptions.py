"""Exception types shared across the package."""


class GeoExpandError(Exception):
    """Base class for all package errors."""


class ValidationError(GeoExpandError, ValueError):
    """Input violates a documented precondition."""


class ConditioningError(GeoExpandError, ArithmeticError):
    """A covariance system could not be factorized, even with jitter."""


class EmptyResultError(GeoExpandError, ValueError):
    """An operation filtered away every input element."""


class UndefinedStatisticError(GeoExpandError, ValueError):
    """A statistic is undefined for the given data (e.g. zero variance)."""


class FitError(GeoExpandError, RuntimeError):
    """An optimizer stopped before converging.

    The best parameters found so far are kept on ``best``.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class ParseError(GeoExpandError, ValueError):
    """A text input could not be parsed; ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)
        self.line = line
