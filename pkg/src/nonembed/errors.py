"""Exception types shared across the toolkit."""


class CapacityError(ValueError):
    """Input exceeds the size an exact routine is willing to handle."""


class PreconditionError(ValueError):
    """Input violates a documented precondition of an operation."""


class UnboundedError(ArithmeticError):
    """A ratio or optimum is unbounded for the given data."""
