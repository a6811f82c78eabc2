"""Exception types shared across the package."""


class DirfError(Exception):
    """Base class for all errors raised by this package."""


class DomainError(DirfError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class SingularityError(DirfError, ArithmeticError):
    """A matrix that must be positive definite is (numerically) singular."""


class DegeneracyError(DirfError, ArithmeticError):
    """A fit or transform is degenerate (e.g. hypothesis sits at the MLE)."""


class PerfectFitError(DirfError, ArithmeticError):
    """Residual variance is zero; the line density is undefined."""


class AccuracyError(DirfError, ArithmeticError):
    """Numerical refinement exhausted without meeting the accuracy target.

    Carries the best available estimate and its error bound so callers can
    decide whether to accept a degraded answer.
    """

    def __init__(self, message, estimate=None, error_bound=None):
        super().__init__(message)
        self.estimate = estimate
        self.error_bound = error_bound


class ParseError(DirfError, ValueError):
    """Malformed input file or CLI argument."""
