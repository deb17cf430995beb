"""Exception hierarchy shared by all tdcr modules."""


class TDCRError(Exception):
    """Base class for library errors."""


class DomainError(TDCRError, ValueError):
    """An argument lies outside the domain of an operation."""


class SingularConfigurationError(TDCRError):
    """The arc-space parametrization was evaluated too close to a straight segment."""


class ModelError(TDCRError):
    """The dynamic model produced a numerically unusable quantity (e.g. non-SPD mass matrix)."""


class IntegrationError(TDCRError):
    """The ODE integrator could not advance.

    Attributes
    ----------
    t : float
        Time at which integration stopped.
    y : numpy.ndarray
        State at that time.
    """

    def __init__(self, message, t=None, y=None):
        super().__init__(message)
        self.t = t
        self.y = y


class ConfigError(TDCRError):
    """Malformed or inconsistent experiment configuration."""
