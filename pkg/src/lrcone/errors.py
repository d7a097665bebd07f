"""Exception hierarchy. The CLI maps these onto its exit codes."""


class LrconeError(Exception):
    pass


class DomainError(LrconeError, ValueError):
    """A parameter lies outside the region where a formula is defined."""


class ConvergenceError(DomainError):
    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class ResourceError(DomainError):
    """The requested system is too large for dense exact treatment."""


class ConfigError(LrconeError, ValueError):
    pass
