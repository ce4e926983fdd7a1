"""Exception hierarchy.

Every error raised on purpose by the package derives from ``OptDmdError`` so
callers (and the CLI) can catch one type and still report a precise kind.
"""


class OptDmdError(Exception):
    """Base class for all package errors."""


class NonFinite(OptDmdError, ArithmeticError):
    """An input contains NaN/Inf, or a computed exponential would overflow."""


class ShapeMismatch(OptDmdError, ValueError):
    pass


class IndexOutOfRange(OptDmdError, IndexError):
    pass


class LengthMismatch(OptDmdError, ValueError):
    pass


class ZeroEigenvalue(OptDmdError, ValueError):
    """A discrete-time eigenvalue of exactly zero has no logarithm."""


class RankTooLarge(OptDmdError, ValueError):
    pass


class RankConstraintViolated(OptDmdError, ValueError):
    pass


class SingularBackward(OptDmdError, ArithmeticError):
    pass


class SingularBlock(OptDmdError, ArithmeticError):
    pass


class NonDiagonalizable(OptDmdError, ArithmeticError):
    pass


class SearchCapExceeded(OptDmdError, ValueError):
    pass


class EmptySpectrum(OptDmdError, ValueError):
    pass


class DegenerateGrid(OptDmdError, ValueError):
    pass


class ZeroData(OptDmdError, ValueError):
    pass


class ParseError(OptDmdError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NonMonotoneTime(OptDmdError, ValueError):
    pass
