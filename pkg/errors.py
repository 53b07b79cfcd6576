"""
BellNoise - Exceptions
"""


class BellNoiseError(ValueError):
    """Base class for library errors"""


class DomainError(BellNoiseError):
    """Input outside the domain of an operation"""


class UnidentifiableError(DomainError):
    """Data cannot determine the requested parameters"""


class ConfigError(DomainError):
    """Malformed or unsupported configuration file"""


class ConvergenceError(BellNoiseError):
    """Iteration did not reach its fixed point within the cap"""
