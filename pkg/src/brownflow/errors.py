"""Exception types shared across brownflow modules."""


class BrownflowError(Exception):
    """Base class for all brownflow-specific errors."""


class InvalidDimensionError(BrownflowError, ValueError):
    """Matrix dimension is zero or otherwise unusable."""


class DomainError(BrownflowError, ValueError):
    """An argument lies outside the mathematical domain of the operation."""


class LifetimeExceededError(DomainError):
    """A characteristic was evaluated at or past its blow-up time."""


class PoleError(DomainError):
    """Evaluation at a pole of a conformal map."""


class SingularityError(BrownflowError, ArithmeticError):
    """A denominator vanished where the formulas should be regular."""


class EigensolveError(BrownflowError, RuntimeError):
    """Dense eigensolver failed to converge."""

    def __init__(self, message, context=None):
        super().__init__(message)
        self.context = context


class QuadratureError(BrownflowError, RuntimeError):
    """Adaptive quadrature did not converge; carries the achieved estimate."""

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


class SeriesGuardError(BrownflowError, ValueError):
    """Truncated-series evaluation requested outside its convergence guard."""


class ConfigError(BrownflowError, ValueError):
    """Invalid CLI / run configuration."""
