"""Exception types shared across the package."""


class GuardError(ValueError):
    """Problem size exceeds a configured guard (chain length, number of uses)."""


class BudgetError(RuntimeError):
    """Symbolic reduction would exceed its term-count budget."""


class ContractionError(ValueError):
    """A channel index does not appear exactly twice, contiguously in time."""
