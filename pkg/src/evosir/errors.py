"""Exception types shared across the package."""


class ParameterError(ValueError):
    """A parameter lies outside its valid domain."""


class NoEpidemicError(ValueError):
    """No finite critical value exists: the process is subcritical for every rate."""


class NumericError(RuntimeError):
    """An iterative or integration routine failed to meet its tolerance."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class GraphConsistencyError(RuntimeError):
    """An operation referenced an edge that is not present."""
