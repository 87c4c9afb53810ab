"""Sharp constants for weighted Poincare and improved Hardy inequalities."""

from .errors import (
    DegeneratePoint,
    DivergentIntegral,
    DomainError,
    HardyPoincareError,
    InsufficientRange,
    NonConvergence,
    NumericalFailure,
    SingularQuotient,
    ValidationError,
)

__version__ = "0.1.0"

__all__ = [
    "DegeneratePoint",
    "DivergentIntegral",
    "DomainError",
    "HardyPoincareError",
    "InsufficientRange",
    "NonConvergence",
    "NumericalFailure",
    "SingularQuotient",
    "ValidationError",
    "__version__",
]
