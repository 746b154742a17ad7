"""Exception hierarchy.

Two families: bad input (`ValidationError`) and numerical failure
(`NumericalError`). The CLI maps them to exit codes 2 and 3.
"""


class AdaptMMError(Exception):
    """Base class for all package errors."""


class ValidationError(AdaptMMError, ValueError):
    """Malformed or out-of-contract input."""


class NumericalError(AdaptMMError, ArithmeticError):
    """A computation could not produce a trustworthy result."""


class IngestionError(ValidationError):
    def __init__(self, message, record_index=None):
        super().__init__(message)
        self.record_index = record_index


class InvalidCellConditions(ValidationError):
    pass


class UnsupportedShapeError(ValidationError):
    pass


class SpecParseError(ValidationError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class NotPSDError(NumericalError):
    pass


class RankDeficientError(NumericalError):
    pass


class AnswerabilityError(NumericalError):
    """The workload row space is not contained in the strategy row space."""


class WeightingError(NumericalError):
    pass


class ConvergenceError(WeightingError):
    """Solver hit its iteration budget; carries the best iterate found."""

    def __init__(self, message, best_u=None, gap=None):
        super().__init__(message)
        self.best_u = best_u
        self.gap = gap
