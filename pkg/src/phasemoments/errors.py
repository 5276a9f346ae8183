"""Exception and warning types shared across the package."""


class TruncationError(ValueError):
    """A Fock-space truncation drops more probability than allowed."""

    def __init__(self, message, required_dim=None):
        super().__init__(message)
        self.required_dim = required_dim


class NumericalError(RuntimeError):
    """A numerical procedure failed to reach its accuracy contract."""


class CacheError(RuntimeError):
    """A cached kernel table is unreadable, stale or fails its checksum."""


class ConfigError(ValueError):
    """An experiment configuration is malformed or out of range."""


class ConsistencyWarning(UserWarning):
    """An estimate lies outside its physically allowed range."""
