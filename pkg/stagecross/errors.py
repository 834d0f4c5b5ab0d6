"""Exception hierarchy shared by every stagecross module."""


class StagecrossError(Exception):
    """Base class for all errors raised by stagecross."""


class DomainError(StagecrossError, ValueError):
    """An argument lies outside the domain of the function it was passed to."""

    def __init__(self, message, iterate_index=None):
        super().__init__(message)
        self.iterate_index = iterate_index


class NoFiniteBandError(DomainError):
    """The cost-ratio function grows outside every critical band."""


class PreconditionError(StagecrossError, ValueError):
    """A documented precondition of an operation does not hold."""


class ConvergenceError(StagecrossError, RuntimeError):
    """An iterative computation hit its hard cap before converging."""


class StageCapExceeded(StagecrossError, RuntimeError):
    """A simulated run needed more stages than the hard cap allows."""


class ConfigError(StagecrossError):
    """Invalid experiment configuration; `field` names the offending input."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
        self.message = message
