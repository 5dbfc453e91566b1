"""Exception types raised across the package."""


class SBFError(Exception):
    """Base class for all package errors."""


class PoleAtNonpositiveInteger(SBFError, ValueError):
    pass


class ParameterDegenerate(SBFError, ValueError):
    """2F1 lower parameter hits a non-positive integer before the series ends."""


class NoConvergence(SBFError, RuntimeError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class DiagonalPoint(SBFError, ValueError):
    """Evaluation requested on r == r', where only the distributional content lives."""


class HypergeometricDivergesAtUnity(SBFError, ArithmeticError):
    pass


class BaseOutOfValidity(SBFError, ValueError):
    pass


class OddSumUnsupported(SBFError, ValueError):
    pass


class NonTriangularOrders(SBFError, ValueError):
    pass


class DivergenceDetected(SBFError, RuntimeError):
    """Partial sums of an oscillatory integral grow without bound.

    Not a bug: the integral is a distribution and has to be smeared.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class SingularKernelUnsupported(SBFError, NotImplementedError):
    """A kernel singularity stronger than a principal value needs the adjoint route."""


class TermLimitExceeded(SBFError, RuntimeError):
    """A closed form grew past the term guard; usually a canonicalisation bug."""
