"""Exception types raised across the package."""


class SparseGpcError(Exception):
    """Base class for all package errors."""


class OutOfSupport(SparseGpcError, ValueError):
    pass


class SingularDensity(SparseGpcError, ValueError):
    pass


class EigenFailure(SparseGpcError, ArithmeticError):
    pass


class UnsupportedIndex(SparseGpcError, ValueError):
    pass


class Unbounded(SparseGpcError, RuntimeError):
    """Index-set enumeration hit its cap without terminating."""


class NonPositiveCoefficient(SparseGpcError, ValueError):
    pass


class BudgetExceeded(SparseGpcError, RuntimeError):
    pass


class DegenerateFit(SparseGpcError, ValueError):
    pass


class DivergentIntegral(SparseGpcError, ValueError):
    pass


class MissingSample(SparseGpcError, KeyError):
    pass


class RejectionStall(SparseGpcError, RuntimeError):
    pass


class QuadratureUnderResolved(SparseGpcError, RuntimeError):
    pass


class StepUnderflow(SparseGpcError, ValueError):
    pass


class ConfigError(SparseGpcError, ValueError):
    """Invalid experiment configuration; ``field`` names the offending key."""

    def __init__(self, msg, field=None, line=None):
        loc = ""
        if field is not None:
            loc = f"[{field}]"
        if line is not None:
            loc += f" (line {line})"
        super().__init__(f"{loc} {msg}".strip())
        self.field = field
        self.line = line


class RankDeficientWarning(UserWarning):
    """Weighted least-squares design matrix is numerically rank deficient."""
