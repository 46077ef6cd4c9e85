"""Exception hierarchy.

``ConfigError`` covers bad parameters and unparseable configuration (CLI exit
code 2); ``PhysicsError`` covers requests the model cannot satisfy (exit
code 3).
"""


class BloError(Exception):
    """Base class for all package errors."""


class ConfigError(BloError, ValueError):
    """Invalid parameters or configuration."""


class PhysicsError(BloError, ValueError):
    """Physically infeasible request."""


class DomainError(PhysicsError):
    """Argument outside the domain of a spectral law (e.g. negative frequency)."""


class InfeasibleFitError(PhysicsError):
    """Measured variance pair cannot come from a lossy pure squeezed state."""


class DegenerateFrequencyError(PhysicsError):
    """Analysis frequency at which the two sideband pairs coincide."""


class OutOfBandError(PhysicsError):
    """Frequency outside the representable or allowed band."""
