"""Stable index and the derived exponents threaded through every module.

A branching mechanism ``psi(u) = u**gamma`` with ``gamma`` in (1, 2] fixes
three exponents that appear all over the toolkit:

* ``gamma`` itself,
* ``alpha_mass = gamma/(gamma-1)``, the mass-scaling exponent (a ball of
  radius ``r`` around a typical point carries mass of order
  ``r**alpha_mass``),
* ``alpha_inv = 1/(gamma-1)``, the exponent of the height/local-time
  scale (e.g. the height tail ``v(a) = ((gamma-1)*a)**(-alpha_inv)``).

``StableIndex`` validates gamma once and is passed everywhere; it is
hashable so per-gamma numeric tables can be cached against it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import DomainError

#: Sentinel for the mu = +infinity transform argument.  An exact IEEE
#: infinity, never a "large float", so the solvers can branch on it
#: without precision traps.
MU_INF = math.inf


@dataclass(frozen=True)
class StableIndex:
    """Validated stable index gamma in (1, 2] plus derived exponents."""

    gamma: float
    alpha_mass: float = field(init=False, repr=False)
    alpha_inv: float = field(init=False, repr=False)

    def __post_init__(self):
        g = self.gamma
        if not isinstance(g, (int, float)) or not math.isfinite(g):
            raise DomainError(f"gamma must be a finite real, got {g!r}")
        g = float(g)
        if not (1.0 < g <= 2.0):
            raise DomainError(f"gamma must lie in (1, 2], got {g}")
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "alpha_mass", g / (g - 1.0))
        object.__setattr__(self, "alpha_inv", 1.0 / (g - 1.0))

    @property
    def beta(self) -> float:
        """Subordination exponent (gamma-1)/gamma, used by the kappa solver."""
        return (self.gamma - 1.0) / self.gamma

    @property
    def is_brownian(self) -> bool:
        return self.gamma == 2.0


@dataclass(frozen=True)
class KappaQuery:
    """Arguments of the Laplace-exponent semigroup kappa_a(lambda, mu).

    ``a`` is a level in tree-height units, ``lam`` weights the mass below
    the level and ``mu`` weights the level local time.  ``mu`` may be
    ``MU_INF``; everything else must be finite and nonnegative.  At
    ``a == 0`` the semigroup returns ``mu`` exactly.
    """

    a: float
    lam: float
    mu: float

    def __post_init__(self):
        for name in ("a", "lam"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0.0:
                raise DomainError(f"{name} must be finite and >= 0, got {v!r}")
        mu = self.mu
        if math.isnan(mu) or mu < 0.0:
            raise DomainError(f"mu must be >= 0 or MU_INF, got {mu!r}")
