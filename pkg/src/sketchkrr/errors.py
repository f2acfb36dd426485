"""Exception types raised across the package."""


class SketchKrrError(Exception):
    """Base class for all package errors."""


class DimensionMismatch(SketchKrrError, ValueError):
    pass


class NotPositiveDefinite(SketchKrrError, ArithmeticError):
    """A Cholesky pivot was non-positive."""


class SingularTriangular(SketchKrrError, ArithmeticError):
    pass


class LengthNotPowerOfTwo(SketchKrrError, ValueError):
    pass


class NoConvergence(SketchKrrError, ArithmeticError):
    pass


class NoConvergenceWarning(RuntimeWarning):
    """Emitted when an iterative estimate hits its iteration cap."""


class NonPositiveLambda(SketchKrrError, ValueError):
    pass


class InvalidDelta(SketchKrrError, ValueError):
    pass


class BreakdownDetected(SketchKrrError, ArithmeticError):
    """PCG saw p^T A p <= 0, so the operator is not positive definite."""


class BudgetExhausted(SketchKrrError):
    """Adaptive sizing reached ``s_max`` without passing the quality test.

    Attributes:
        report: the quality report of the last attempt.
        history: every report produced along the way.
    """

    def __init__(self, message, report=None, history=None):
        super().__init__(message)
        self.report = report
        self.history = list(history or [])


class UnknownLabel(SketchKrrError, ValueError):
    pass


class ParseError(SketchKrrError, ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class EmptyFile(SketchKrrError, ValueError):
    pass


class ModelFormatError(SketchKrrError, ValueError):
    pass
