"""Exception types raised across the package."""


class NonGaussError(Exception):
    """Base class for all package errors."""


class DomainError(NonGaussError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConvergenceError(NonGaussError, RuntimeError):
    """An eigen-solution did not converge at the requested truncation."""


class TruncationError(NonGaussError, ValueError):
    """The requested mode count exceeds what the truncation can resolve.

    ``safe_bound`` carries the largest mode count that is reliable.
    """

    def __init__(self, message, safe_bound):
        super().__init__(message)
        self.safe_bound = safe_bound


class DegenerateBasisError(NonGaussError, ValueError):
    """All kernel eigenvalues vanish, so no weight vector can be normalized."""


class DegenerateScenarioError(NonGaussError, ArithmeticError):
    """The trigger probability is too small to condition on."""

    def __init__(self, message, p_det=None):
        super().__init__(message)
        self.p_det = p_det


class ConfigError(NonGaussError, ValueError):
    """A scenario configuration is inconsistent or incomplete."""
