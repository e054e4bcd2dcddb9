"""Exception types raised across the package."""


class NormgridError(Exception):
    """Base class for all package errors."""


class InvalidArgument(NormgridError, ValueError):
    pass


class NumericalFailure(NormgridError, RuntimeError):
    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class Infeasible(NormgridError, ValueError):
    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class SpanDeficiency(NormgridError, ValueError):
    """No candidate keeps the node determinant away from zero."""

    def __init__(self, message: str, step: int):
        super().__init__(message)
        self.step = step


class PreconditionViolation(NormgridError, ValueError):
    pass
