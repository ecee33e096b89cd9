"""Exception types shared across the package."""


class TvprError(Exception):
    """Base class for all package errors."""


class DimensionError(TvprError, ValueError):
    pass


class InvariantError(TvprError, ValueError):
    pass


class PreconditionError(TvprError, ValueError):
    pass


class ConfigError(TvprError, ValueError):
    pass


class NumericalError(TvprError, ArithmeticError):
    """Raised when an iteration produces non-finite values.

    ``state`` holds the last valid iterate, if one is available.
    """

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state
