"""Exception types shared across the package."""

import numpy as np


class ParameterDomainError(ValueError):
    """A model or process parameter is outside its admissible range."""


class UnsupportedModelError(ValueError):
    """The requested operation is not defined for this correlation model."""


class DegenerateConfigurationError(ValueError):
    """A point configuration is empty or contains coincident points."""


class IllConditionedCovarianceError(np.linalg.LinAlgError):
    """Cholesky factorization failed even after the ridge policy was exhausted."""

    def __init__(self, message, min_eigenvalue=None):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


class InsufficientReplicationsError(ValueError):
    """Too few Monte Carlo replications for the requested estimate."""


class ConfigError(ValueError):
    """Invalid experiment configuration; ``fields`` names the offending keys."""

    def __init__(self, message, fields=()):
        super().__init__(message)
        self.fields = tuple(fields)
