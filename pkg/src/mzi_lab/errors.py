"""Exception types shared across the package."""


class MziLabError(Exception):
    """Base class for all errors raised by mzi_lab."""


class InvalidArgument(MziLabError, ValueError):
    """An argument is outside its allowed domain (negative squeezing, ...)."""


class NumericFailure(MziLabError, ArithmeticError):
    """A numerical operation failed (singular matrix, non-positive determinant)."""


class UnsupportedConfiguration(MziLabError, ValueError):
    """The requested resource/loss combination has no implemented formula."""


class DegenerateWorkingPoint(MziLabError, RuntimeError):
    """The signal slope vanishes at the requested phase; the estimator is blind there."""


class NoOptimum(MziLabError, RuntimeError):
    """An optimizer found no evaluable point on its search domain."""


class CutoffTooSmall(MziLabError, ValueError):
    """Fock-space truncation leaks too much probability for the requested state."""
