"""Signal spectra of planar wireless networks with correlated log-normal shadowing.

Simulation of the inverse-signal-strength process seen at the origin,
Poisson-approximation error bounds and count diagnostics.
"""

__version__ = "0.1.0"

from .corrfuncs import CorrelationModel, Kind, eval_rho, upd_delta
from .errors import (
    ConfigError,
    DegenerateConfigurationError,
    IllConditionedCovarianceError,
    InsufficientReplicationsError,
    ParameterDomainError,
    UnsupportedModelError,
)
from .placement import PlacementKind, PointConfig
from .spectrum import PropagationParams

__all__ = [
    "__version__",
    "CorrelationModel",
    "Kind",
    "eval_rho",
    "upd_delta",
    "PlacementKind",
    "PointConfig",
    "PropagationParams",
    "ConfigError",
    "DegenerateConfigurationError",
    "IllConditionedCovarianceError",
    "InsufficientReplicationsError",
    "ParameterDomainError",
    "UnsupportedModelError",
]
