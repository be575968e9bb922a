"""stabletrees: numerics and Monte Carlo for stable continuum random trees.

Submodules
----------
kappa    branching Laplace-exponent semigroup and the transforms built on it
tails    explicit series/asymptotics for the Brownian case, coefficients, gauges
laplace  dual-method numerical Laplace inversion and monotone CDF tables
sampler  reproducible stable/subordinator/ball-mass samplers
crt      Brownian tree simulator (excursions, tree metric, ball masses)
verify   the runnable acceptance suite behind ``stabletrees verify``
"""

from .index import MU_INF, KappaQuery, StableIndex
from .errors import (
    ConfigurationError,
    DomainError,
    InversionDisagreementError,
    NumericError,
)

__all__ = [
    "StableIndex",
    "KappaQuery",
    "MU_INF",
    "DomainError",
    "NumericError",
    "InversionDisagreementError",
    "ConfigurationError",
]

__version__ = "0.1.0"
