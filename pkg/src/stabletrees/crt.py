"""Brownian-case tree simulation: excursions, tree metric, ball masses.

The tree is coded by a height excursion on a uniform grid of [0, 1].  The
excursion is the standard normalized Brownian excursion (bridge plus
rotation at the argmin) scaled by sqrt(2), which is the height-process
normalization under which the level-a crossing intensity is 1/a and the
spinal unit-ball mass law M applies to r**-2-scaled ball masses.

Two refinements keep grid artifacts out of the distributional checks:

* each grid cell carries an exactly sampled conditional minimum of the
  Brownian bridge across it, so branch heights (and hence tree distances)
  have the continuum law at grid times rather than the upward-biased
  grid minimum;
* mass is counted in whole cells of size 1/n, the image of Lebesgue
  measure under the coding.

The expensive sweeps live in :mod:`stabletrees._kernels` (numba with a
NumPy fallback).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _kernels as K
from ._io import atomic_write_text, fmt
from .errors import DomainError
from .sampler import RngStream

__all__ = [
    "ExcursionGrid",
    "BallMassProfile",
    "sample_normalized_excursion",
    "tree_distance",
    "ball_mass",
    "ball_profile",
    "extremal_ball_mass",
    "extremal_ball_masses",
    "occupation_local_time",
    "count_high_excursions",
    "ball_masses_to_csv",
    "extremal_stats_to_csv",
]

#: height scaling of the standard normalized excursion that produces the
#: tree-metric normalization with crossing intensity v(a) = 1/a
HEIGHT_SCALE = math.sqrt(2.0)


@dataclass
class ExcursionGrid:
    """A coded tree: grid heights, exact cell minima, optional RMQ table."""

    H: np.ndarray                 # n+1 heights, H[0] = H[n] = 0
    cell_min: np.ndarray          # n per-cell path minima
    seed: Optional[int] = None
    stream_id: Optional[int] = None
    _rmq: Optional[list] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        H = np.ascontiguousarray(self.H, dtype=np.float64)
        cm = np.ascontiguousarray(self.cell_min, dtype=np.float64)
        if H.ndim != 1 or H.size < 2 or cm.size != H.size - 1:
            raise DomainError("need n+1 heights and n cell minima")
        if H[0] != 0.0 or H[-1] != 0.0:
            raise DomainError("excursion endpoints must be exactly 0")
        if (np.minimum(H[:-1], H[1:]) < cm).any():
            raise DomainError("cell minima must not exceed their cell endpoints")
        self.H = H
        self.cell_min = cm

    @property
    def n(self) -> int:
        return self.cell_min.size

    @property
    def max_height(self) -> float:
        """Total height of the coded tree (sup of the excursion)."""
        return float(self.H.max())

    @classmethod
    def from_heights(cls, H, **kw) -> "ExcursionGrid":
        """Deterministic grid (piecewise-linear path): cell minima are the
        endpoint minima.  Used for hand-built oracle paths."""
        H = np.asarray(H, float)
        return cls(H=H, cell_min=np.minimum(H[:-1], H[1:]), **kw)

    # -- range-minimum over cell minima (sparse table, O(1) queries) --------

    def _ensure_rmq(self):
        if self._rmq is not None:
            return
        levels = [self.cell_min]
        size = self.n
        width = 1
        while 2 * width <= size:
            prev = levels[-1]
            levels.append(np.minimum(prev[:-width], prev[width:]))
            width *= 2
        self._rmq = levels

    def _range_min(self, lo: int, hi: int) -> float:
        """min(cell_min[lo:hi]), hi > lo, via the sparse table."""
        self._ensure_rmq()
        span = hi - lo
        k = span.bit_length() - 1
        lvl = self._rmq[k]
        return float(min(lvl[lo], lvl[hi - (1 << k)]))


def sample_normalized_excursion(n: int, stream: RngStream) -> ExcursionGrid:
    """Sample the tree-coding excursion on an n-cell grid.

    Bridge increments are Gaussian with variance 1/n, the bridge is rotated
    at its argmin (Vervaat) and the minimum subtracted, giving the standard
    normalized Brownian excursion; heights are then scaled by sqrt(2) to
    the tree-metric normalization, and every cell receives an exactly
    sampled conditional bridge minimum.

    ``n`` must be a power of two, at least 1024.
    """
    if n < 1024 or (n & (n - 1)) != 0:
        raise DomainError("n must be a power of two, >= 1024")
    rng = stream.generator()
    inc = rng.standard_normal(n) / math.sqrt(n)
    walk = np.empty(n + 1)
    walk[0] = 0.0
    np.cumsum(inc, out=walk[1:])
    bridge = walk - np.arange(n + 1) / n * walk[-1]
    pivot = int(np.argmin(bridge[:n]))
    exc = np.concatenate([bridge[pivot:n], bridge[:pivot + 1]]) - bridge[pivot]
    exc[0] = 0.0
    exc[-1] = 0.0
    H = HEIGHT_SCALE * exc
    # exact conditional cell minima: a bridge from x to y with variance v
    # across the cell has P(min <= m) = exp(-2(x-m)(y-m)/v); conditioning the
    # minimum to stay positive (the excursion never touches 0 inside) maps
    # U to K + U(1-K) with K = exp(-2xy/v), and makes the two boundary cells
    # (x*y = 0) come out exactly 0, as the continuum excursion requires.
    x, y = H[:-1], H[1:]
    v = HEIGHT_SCALE ** 2 / n
    K = np.exp(-2.0 * x * y / v)
    q = -0.5 * v * np.log(K + rng.random(n) * (1.0 - K))
    cmin = 0.5 * ((x + y) - np.sqrt((x - y) ** 2 + 4.0 * q))
    cmin[0] = 0.0
    cmin[-1] = 0.0
    return ExcursionGrid(H=H, cell_min=cmin, seed=stream.seed, stream_id=stream.stream_id)


# ---------------------------------------------------------------------------
# tree metric and ball masses
# ---------------------------------------------------------------------------

def _check_index(g: ExcursionGrid, s: int, top: int):
    if not (0 <= s <= top):
        raise DomainError(f"index {s} outside [0, {top}]")


def tree_distance(g: ExcursionGrid, s: int, t: int) -> float:
    """d(s, t) = H[s] + H[t] - 2 * (branch height between s and t).

    A pseudo-metric on grid times; zero iff the two times code the same
    tree point.
    """
    _check_index(g, s, g.n)
    _check_index(g, t, g.n)
    if s == t:
        return 0.0
    lo, hi = (s, t) if s < t else (t, s)
    return float(g.H[s] + g.H[t] - 2.0 * g._range_min(lo, hi))


def ball_mass(g: ExcursionGrid, t: int, r: float) -> float:
    """Mass of the open ball of radius r around the point coded at cell t:
    the fraction of cells s with d(s, t) < r."""
    _check_index(g, t, g.n - 1)
    if r < 0.0 or math.isnan(r):
        raise DomainError("radius must be >= 0")
    if r == 0.0:
        return 0.0
    return K._ball_count(g.H, g.cell_min, t, r) / g.n


@dataclass(frozen=True)
class BallMassProfile:
    """Ball masses around one center for a whole ladder of radii."""

    center: int
    radii: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.masses, float)
        if (np.diff(m) < 0).any() or (m < 0).any() or (m > 1).any():
            raise DomainError("profile masses must be nondecreasing within [0, 1]")


def ball_profile(g: ExcursionGrid, t: int, radii) -> BallMassProfile:
    """All radii in one sweep: one distance pass, then a sorted count.

    ``radii`` must be nondecreasing.
    """
    _check_index(g, t, g.n - 1)
    radii = np.asarray(radii, float)
    if (np.diff(radii) < 0).any() or (radii < 0).any():
        raise DomainError("radii must be nondecreasing and >= 0")
    d = np.empty(g.n)
    K._ball_distances(g.H, g.cell_min, t, d)
    d.sort()
    counts = np.searchsorted(d, radii, side="left")
    return BallMassProfile(center=t, radii=radii, masses=counts / g.n)


def extremal_ball_mass(g: ExcursionGrid, r: float, mode: str,
                       decimation: int | None = None) -> float:
    """min/max of ``ball_mass`` over a decimated sweep of centers.

    Centers are every ``decimation``-th cell (default n/4096, at least 1);
    the result brackets the true extremum from inside (reported inf >= true
    inf, reported sup <= true sup).  ``r`` must exceed 8 grid cells, 8/n.
    """
    if mode not in ("inf", "sup"):
        raise DomainError(f"mode must be 'inf' or 'sup', got {mode!r}")
    lo, hi = extremal_ball_masses(g, r, decimation)
    return lo if mode == "inf" else hi


def extremal_ball_masses(g: ExcursionGrid, r: float,
                         decimation: int | None = None) -> tuple[float, float]:
    """(inf, sup) of ball masses over the decimated center sweep in one pass."""
    res = 8.0 / g.n
    if not (r > res):
        raise DomainError(f"radius {r:g} below grid resolution floor {res:g}")
    step = decimation if decimation is not None else max(g.n // 4096, 1)
    if step < 1:
        raise DomainError("decimation must be >= 1")
    lo, hi = K._extremal_counts(g.H, g.cell_min, step, r)
    return lo / g.n, hi / g.n


def ball_masses_at(g: ExcursionGrid, centers, r: float) -> np.ndarray:
    """Vector of ball masses at the given centers (cells)."""
    centers = np.asarray(centers, dtype=np.int64)
    if centers.size and (centers.min() < 0 or centers.max() >= g.n):
        raise DomainError("centers must be cell indices in [0, n)")
    out = np.empty(centers.size, dtype=np.int64)
    K._ball_counts_many(g.H, g.cell_min, centers, r, out)
    return out / g.n


def occupation_local_time(g: ExcursionGrid, a: float, eps: float) -> float:
    """Occupation quotient (1/eps) * Leb{s : a - eps < H_s <= a} on the grid."""
    if not (0.0 < eps < a):
        raise DomainError("need 0 < eps < a")
    return K._occupation_count(g.H, a, eps) / (eps * g.n)


def count_high_excursions(g: ExcursionGrid, a: float, eps: float) -> int:
    """#excursion intervals of H above level a with maximum above a + eps."""
    if not (a > 0.0 and eps > 0.0):
        raise DomainError("need a > 0 and eps > 0")
    return int(K._count_high_excursions(g.H, a, eps))


# ---------------------------------------------------------------------------
# CSV emitters
# ---------------------------------------------------------------------------

def ball_masses_to_csv(path, rows, seed=None):
    """rows: iterable of (tree_id, center, r, mass)."""
    lines = ["# stabletrees ball-masses v1"]
    if seed is not None:
        lines.append(f"# seed={seed}")
    lines.append("tree_id,center,r,mass")
    lines.extend(f"{tid},{center},{fmt(r)},{fmt(mass)}" for tid, center, r, mass in rows)
    atomic_write_text(path, "\n".join(lines) + "\n")


def extremal_stats_to_csv(path, rows, seed=None):
    """rows: iterable of (r, inf_mass, sup_mass, n, centers_used)."""
    lines = ["# stabletrees extremal-stats v1"]
    if seed is not None:
        lines.append(f"# seed={seed}")
    lines.append("r,inf_mass,sup_mass,n,centers_used")
    lines.extend(f"{fmt(r)},{fmt(lo)},{fmt(hi)},{n},{c}" for r, lo, hi, n, c in rows)
    atomic_write_text(path, "\n".join(lines) + "\n")
