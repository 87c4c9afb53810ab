"""Exception types raised by the numerical routines."""


class HardyPoincareError(Exception):
    """Base class for all package errors."""


class ValidationError(HardyPoincareError, ValueError):
    """A parameter violates an operation's precondition."""


class NumericalFailure(HardyPoincareError, ArithmeticError):
    """A numerical procedure could not deliver the requested accuracy."""


class NonConvergence(NumericalFailure):
    """Seed iteration or step acceptance failed to meet the tolerance."""


class InsufficientRange(NumericalFailure):
    """Fewer sign changes than requested inside the maximal search range."""


class DivergentIntegral(NumericalFailure):
    """Exponent bookkeeping shows a radial integral is not finite."""


class SingularQuotient(NumericalFailure):
    """A test function does not vanish where the extremal profile does."""


class DomainError(ValidationError):
    """Evaluation point outside the domain of a formula (e.g. the origin)."""


class DegeneratePoint(ValidationError):
    """Sample point too close to the degenerate set of a gauge."""
