"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """A filtration function or experiment was set up inconsistently."""


class SimplicityError(ValueError):
    """Two marked points share a location."""

    def __init__(self, message: str = "simplicity violated: duplicate positions"):
        super().__init__(message)


class BudgetExceeded(RuntimeError):
    """A complex grew past the configured simplex budget."""
