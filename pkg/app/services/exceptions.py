"""Service-layer exception hierarchy."""
from __future__ import annotations


class ServiceError(Exception):
    """Base service error."""


class InvalidArgumentError(ServiceError):
    """Raised when an operation receives an argument outside its domain."""


class ConfigurationError(ServiceError):
    """Raised when a scenario file or input document fails validation."""


class NumericalError(ServiceError):
    """Raised when a run produces a non-finite estimate it cannot recover from."""
