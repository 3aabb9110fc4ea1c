"""Exception hierarchy shared by every engine."""


class MLVEError(Exception):
    """Base class for all errors raised by :mod:`mlvec`."""


class BranchCut(MLVEError, ArithmeticError):
    """A logarithm or square root was asked to evaluate on its branch cut."""

    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


class PoleHit(MLVEError, ZeroDivisionError):
    """The inverse resolvent was evaluated (numerically) at its pole."""


class QuadratureNoConverge(MLVEError):
    pass


class CubatureNoConverge(MLVEError):
    pass


class CapExceeded(MLVEError, ValueError):
    """An enumeration was requested beyond its configured hard cap."""


class BoundViolated(MLVEError, AssertionError):
    """A sampled resolvent exceeded the cardioid bound."""

    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


class OrderTooHigh(MLVEError, ValueError):
    pass


class DegeneratePade(MLVEError, ArithmeticError):
    pass


class NotPSD(MLVEError, ValueError):
    pass


class UnbalancedMonomial(MLVEError, ValueError):
    pass


class IllConditioned(MLVEError, ArithmeticError):
    pass
