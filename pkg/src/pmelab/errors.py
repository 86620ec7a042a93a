"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class CFLViolation(RuntimeError):
    """A requested explicit step exceeds the stability limit."""


class NumericalFailure(RuntimeError):
    """Non-finite values appeared during a computation."""
