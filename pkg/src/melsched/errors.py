"""Exception types shared across the package."""


class InfeasibleError(ValueError):
    """A schedule or parameter set admits no feasible solution.

    ``shortfall`` carries the amount (seconds or samples, depending on the
    raiser) by which the request missed feasibility, when it is known.
    """

    def __init__(self, message, shortfall=None):
        super().__init__(message)
        self.shortfall = shortfall


class ConfigError(ValueError):
    """Raised for unknown keys, missing keys or malformed values in a config."""
