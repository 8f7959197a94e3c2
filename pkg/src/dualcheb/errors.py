"""Exception types raised across the package."""


class DualChebError(Exception):
    """Base class for all package errors."""


class ZeroGradient(DualChebError, ValueError):
    """A loss gradient has (numerically) zero norm and cannot be normalized."""


class DimensionMismatch(DualChebError, ValueError):
    pass


class WrongArity(DualChebError, ValueError):
    """A solver was called with an unsupported number of losses."""


class UnsupportedNorm(DualChebError, ValueError):
    pass


class DimensionCapExceeded(DualChebError, ValueError):
    """Problem too large for the dense LP / brute-force paths."""


class DegenerateDirection(DualChebError, ArithmeticError):
    """The aggregate ``w`` is (numerically) zero; no direction can be recovered."""


class DegenerateBisector(DualChebError, ArithmeticError):
    pass


class Infeasible(DualChebError, ArithmeticError):
    """The equal-inner-product system has no solution."""


class SingularSystem(DualChebError, ArithmeticError):
    pass


class ZeroReference(DualChebError, ValueError):
    pass


class ConfigError(DualChebError, ValueError):
    pass


class NonFiniteError(DualChebError, FloatingPointError):
    """Raised when a loss or gradient becomes NaN/Inf during training."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step
