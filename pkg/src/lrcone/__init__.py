"""Lieb-Robinson bounds for power-law interacting lattices, with an exact-dynamics oracle."""

from lrcone.errors import ConfigError, ConvergenceError, DomainError, LrconeError, ResourceError

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ConvergenceError",
    "DomainError",
    "LrconeError",
    "ResourceError",
    "__version__",
]
