"""Exception types shared across the package."""


class SketchError(Exception):
    """Base class for all package errors."""


class ParameterError(SketchError, ValueError):
    """A numeric or categorical argument is outside its valid range."""


class DimensionError(SketchError, ValueError):
    """Shapes of the operands do not agree, or a matrix is empty."""


class DegenerateInputError(SketchError, ValueError):
    """The input is valid but the requested quantity is undefined for it (e.g. a zero matrix)."""


class ConsistencyError(SketchError, ValueError):
    """A sampling distribution does not belong to the matrix it is applied to."""


class SizeGuardError(SketchError, ValueError):
    """Exhaustive search refused because the instance is too large."""


class ParseError(SketchError, ValueError):
    """Malformed matrix file. ``line`` is 1-based."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConvergenceError(SketchError, RuntimeError):
    """An iterative method hit its iteration cap.

    The best iterate found so far is kept on ``result`` so the caller can
    decide whether it is good enough.
    """

    def __init__(self, message, result=None):
        self.result = result
        super().__init__(message)
