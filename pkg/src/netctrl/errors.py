"""Exception hierarchy shared by every netctrl module."""


class NetCtrlError(Exception):
    """Base class for all errors raised by netctrl."""


class NonSquare(NetCtrlError, ValueError):
    pass


class NonPositivePeriod(NetCtrlError, ValueError):
    pass


class DimensionMismatch(NetCtrlError, ValueError):
    pass


class ConvergenceFailure(NetCtrlError, ArithmeticError):
    pass


class IllConditioned(NetCtrlError, ArithmeticError):
    """Raised when a Jordan structure cannot be resolved reliably in floating point."""


class NotAnEigenvector(NetCtrlError, ValueError):
    pass


class UnknownEigenvalue(NetCtrlError, ValueError):
    pass


class NotApplicable(NetCtrlError, ValueError):
    """A criterion was asked to run on a system outside its hypotheses."""


class ZeroWeight(NotApplicable):
    pass


class ParseError(NetCtrlError, ValueError):
    pass


class ValidationError(NetCtrlError, ValueError):
    """Invalid system document; ``path`` points at the offending field."""

    def __init__(self, message, path=None):
        self.path = path
        if path:
            message = f"{path}: {message}"
        super().__init__(message)


class InternalInconsistency(NetCtrlError, RuntimeError):
    """Two independent routes disagree: a bug or a tolerance failure."""
