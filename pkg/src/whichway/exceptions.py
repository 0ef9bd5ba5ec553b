"""Exception and warning types raised by whichway."""


class WhichWayError(Exception):
    """Base class for all package errors."""


class ConfigError(WhichWayError, ValueError):
    """An experiment parameter is outside its domain."""

    def __init__(self, parameter, message):
        self.parameter = parameter
        super().__init__(f"{parameter}: {message}")


class PreconditionError(WhichWayError, ValueError):
    """An operation was called with a configuration it does not support."""

    def __init__(self, parameter, message):
        self.parameter = parameter
        super().__init__(f"{parameter}: {message}")


class UndefinedFringeError(PreconditionError):
    """The pattern has no far-field fringes (screen at the slit plane)."""


class EstimatorError(WhichWayError, RuntimeError):
    """A fringe fit could not be performed."""


class InsufficientSpanError(EstimatorError):
    pass


class DegenerateFitError(EstimatorError):
    pass


class SamplerError(WhichWayError, RuntimeError):
    """Rejection sampling broke its acceptance bound (an internal bug)."""


class SlitOverlapWarning(UserWarning):
    """Slit modes overlap strongly (d < 4 epsilon)."""
