"""Shared exception types."""


class ConfigError(ValueError):
    """A scenario configuration violates its bounds or has unknown keys."""


class UnknownHostError(KeyError):
    """A host id outside the topology was referenced."""


class ProtocolError(ValueError):
    """A malformed or out-of-turn request at the environment boundary."""

    def __init__(self, code: str, message: str):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message


class EngineInvariantError(RuntimeError):
    """Internal consistency violation; indicates a bug, not bad input."""


class PolicyError(RuntimeError):
    """A policy callback raised mid-episode; carries the partial record."""

    def __init__(self, message: str, record=None):
        super().__init__(message)
        self.record = record
