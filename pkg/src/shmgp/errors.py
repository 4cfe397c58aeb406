"""Exception types shared across the toolkit."""


class ConfigError(Exception):
    """Experiment configuration is malformed or inconsistent."""


class DataError(Exception):
    """Input data is missing, unreadable, or violates a data contract."""


class NumericalError(RuntimeError):
    """A numerical routine failed beyond recoverable stabilisation."""


class DomainError(ValueError):
    """A point lies outside the fixed domain of a bounded model."""
