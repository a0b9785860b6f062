"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Malformed or inconsistent input (shape, range, invariant violation)."""


class DomainError(ValueError):
    """Input outside the mathematical domain of an operation."""


class ComputeError(RuntimeError):
    """A computation could not produce a result (no root, budget exceeded)."""
