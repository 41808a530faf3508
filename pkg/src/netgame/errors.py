"""Exception types shared across the package."""


class NetgameError(Exception):
    """Base class for all errors raised by netgame."""


class DimensionError(NetgameError, ValueError):
    """Array shapes are inconsistent with each other."""


class ParameterError(NetgameError, ValueError):
    """A numeric parameter lies outside its admissible range."""


class PreconditionError(NetgameError, ValueError):
    """An input does not satisfy the assumptions an operation relies on."""


class UnsupportedKindError(NetgameError, NotImplementedError):
    """The requested operation is not available for this proximal map kind."""


class IterationLimitError(NetgameError, RuntimeError):
    """An inner iterative solver did not reach its tolerance.

    Attributes
    ----------
    last_iterate : ndarray or None
        The iterate at which the solver stopped.
    residual : float
        The stopping quantity at `last_iterate`.
    """

    def __init__(self, message, last_iterate=None, residual=float("nan")):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual = residual


class ConfigError(NetgameError, ValueError):
    """An experiment configuration is missing a field or has the wrong type."""

    def __init__(self, field, expected, got=None):
        msg = f"config field {field!r}: expected {expected}"
        if got is not None:
            msg += f", got {got!r}"
        super().__init__(msg)
        self.field = field
        self.expected = expected
