"""Random-variate generation for the spinal-decomposition objects.

Streams are counter-based (Philox keyed by (seed, stream_id)), so a batch
is a pure function of its provenance tuple: the same (seed, stream)
reproduces bit-identical draws on any machine, any thread count, any call
order.  Distinct stream ids give statistically independent streams.

The spinal ball mass M (unit width) is sampled by inverse CDF from a
monotone :class:`~stabletrees.laplace.CdfTable` -- exact in law and far
cheaper than simulating the underlying Poisson structure.  Shell masses of
width w are fresh M draws scaled by w**(gamma/(gamma-1)); shells over
disjoint radial intervals are independent by construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import tails
from ._io import atomic_write_text, fmt
from .errors import ConfigurationError, DomainError
from .index import StableIndex
from .laplace import CdfTable

__all__ = [
    "RngStream",
    "SampleBatch",
    "sample_positive_stable",
    "sample_subordinator_path",
    "sample_mstar",
    "sample_shell_masses",
    "sample_single_ball",
    "default_mstar_table",
]


@dataclass(frozen=True)
class RngStream:
    """Value-like handle for one reproducible random stream."""

    seed: int
    stream_id: int = 0
    counter: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id", "counter"):
            v = getattr(self, name)
            if not (0 <= int(v) < 2 ** 64):
                raise DomainError(f"{name} must be a 64-bit nonneg integer, got {v!r}")

    def generator(self) -> np.random.Generator:
        bits = np.random.Philox(key=np.array([self.seed, self.stream_id], dtype=np.uint64))
        if self.counter:
            bits = bits.advance(self.counter)
        return np.random.Generator(bits)

    def child(self, k: int) -> "RngStream":
        """Derived stream: same seed, shifted stream id."""
        return RngStream(self.seed, (self.stream_id + k) % 2 ** 64)


@dataclass(frozen=True)
class SampleBatch:
    """I.i.d. nonnegative draws plus the provenance that regenerates them."""

    values: np.ndarray
    seed: int
    stream_id: int
    count: int
    distribution: str

    def __post_init__(self):
        v = np.asarray(self.values, float)
        if v.ndim != 1 or v.size != self.count:
            raise ConfigurationError("batch size does not match its provenance count")
        if (v < 0).any() or np.isnan(v).any():
            raise ConfigurationError("batch values must be nonnegative")
        object.__setattr__(self, "values", v)

    def to_csv(self, path):
        lines = [
            "# stabletrees sample v1",
            f"# distribution={self.distribution} seed={self.seed} "
            f"stream={self.stream_id} count={self.count}",
            "index,value",
        ]
        lines.extend(f"{i},{fmt(v)}" for i, v in enumerate(self.values))
        atomic_write_text(path, "\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# one-sided stable variates
# ---------------------------------------------------------------------------

def sample_positive_stable(beta: float, scale: float, stream: RngStream, n: int) -> SampleBatch:
    """I.i.d. draws with E[exp(-lam X)] = exp(-scale * lam**beta), beta in (0, 1].

    beta = 1 degenerates to deterministic drift (every draw equals
    ``scale``); otherwise Kanter's representation
    X = scale**(1/beta) * (sin(beta U)/sin(U)**(1/beta))
        * (sin((1-beta) U)/W)**((1-beta)/beta)
    with U ~ Uniform(0, pi), W ~ Exp(1).
    """
    if not (0.0 < beta <= 1.0):
        raise DomainError(f"stable exponent must lie in (0, 1], got {beta!r}")
    if scale < 0.0 or not math.isfinite(scale):
        raise DomainError("scale must be finite and >= 0")
    if n < 0:
        raise DomainError("n must be >= 0")
    tag = f"stable[beta={beta:g},scale={scale:g}]"
    if beta == 1.0 or scale == 0.0:
        vals = np.full(n, scale)
        return SampleBatch(vals, stream.seed, stream.stream_id, n, tag)
    rng = stream.generator()
    u = rng.random(n) * math.pi
    w = -np.log1p(-rng.random(n))
    ratio = (1.0 - beta) / beta
    x = (np.sin(beta * u) / np.sin(u) ** (1.0 / beta)) * (np.sin((1.0 - beta) * u) / w) ** ratio
    vals = scale ** (1.0 / beta) * x
    return SampleBatch(vals, stream.seed, stream.stream_id, n, tag)


def sample_subordinator_path(idx: StableIndex, t_grid, stream: RngStream) -> np.ndarray:
    """One path of the (gamma-1)-stable subordinator with exponent
    gamma * lam**(gamma-1), on an increasing grid starting at 0.

    Increments over [t_i, t_{i+1}] are independent one-sided stable draws
    with scale gamma * dt; gamma = 2 degenerates to the drift 2 t exactly.
    """
    t = np.asarray(t_grid, float)
    if t.ndim != 1 or t.size < 1 or t[0] != 0.0 or (np.diff(t) <= 0).any():
        raise DomainError("t_grid must increase from 0")
    g = idx.gamma
    dt = np.diff(t)
    if g == 2.0:
        return np.concatenate([[0.0], np.cumsum(2.0 * dt)])
    rng = stream.generator()
    u = rng.random(dt.size) * math.pi
    w = -np.log1p(-rng.random(dt.size))
    beta = g - 1.0
    ratio = (1.0 - beta) / beta
    unit = (np.sin(beta * u) / np.sin(u) ** (1.0 / beta)) * (np.sin((1.0 - beta) * u) / w) ** ratio
    inc = (g * dt) ** (1.0 / beta) * unit
    return np.concatenate([[0.0], np.cumsum(inc)])


# ---------------------------------------------------------------------------
# spinal ball and shell masses
# ---------------------------------------------------------------------------

@lru_cache(maxsize=8)
def _brownian_mstar_table(n_points: int = 256) -> CdfTable:
    """gamma = 2 ball-mass table straight from the cancellation-free series."""
    grid = np.geomspace(0.01, 12.0, n_points)
    cdf = np.array([tails.brownian_mstar_cdf_small(float(y)) for y in grid])
    return CdfTable(grid=grid, cdf=cdf, method="series",
                    max_abs_disagreement=0.0, disagreement=np.zeros(n_points),
                    gamma=2.0)


def default_mstar_table(idx: StableIndex, n_points: int = 160) -> CdfTable:
    """Build (or fetch the cached) M table for this index.

    gamma = 2 comes from the explicit series; other gamma run the dual
    Laplace inversion, spanning enough of the power tail that draws beyond
    the table stay around the 1% level.
    """
    if idx.is_brownian:
        return _brownian_mstar_table()
    from .kappa import mstar_transform
    from .laplace import build_cdf_table
    g = idx.gamma
    # right endpoint where the power tail y^-(g-1)/Gamma(2-g) is ~1%,
    # left endpoint where the stretched-exponential left mass is ~exp(-36)
    y_max = max((100.0 / math.gamma(2.0 - g)) ** (1.0 / (g - 1.0)), 8.0)
    y_min = (g - 1.0) / 36.0 ** (1.0 / (g - 1.0))
    return build_cdf_table(mstar_transform(idx), y_min, y_max, n_points)


def sample_mstar(idx: StableIndex, stream: RngStream, n: int,
                 table: CdfTable | None = None) -> SampleBatch:
    """I.i.d. draws of the unit-width spinal ball mass M by inverse CDF."""
    if n < 0:
        raise DomainError("n must be >= 0")
    if table is None:
        if idx.is_brownian:
            table = _brownian_mstar_table()
        else:
            raise ConfigurationError(
                f"no CDF table for gamma={idx.gamma:g}; build one first "
                "(CLI: build-table)")
    if table.gamma != idx.gamma:
        raise ConfigurationError(
            f"table built for gamma={table.gamma:g}, requested {idx.gamma:g}")
    rng = stream.generator()
    u = rng.random(n)
    u = np.clip(u, 1e-15, 1.0 - 1e-15)
    vals = table.ppf(u)
    return SampleBatch(vals, stream.seed, stream.stream_id, n,
                       f"mstar[gamma={idx.gamma:g}]")


def sample_single_ball(idx: StableIndex, r: float, a: float, stream: RngStream,
                       n: int, table: CdfTable | None = None) -> SampleBatch:
    """Draws of the spinal ball mass at radius r (level a >= r): r**(g/(g-1)) * M."""
    if not (0.0 <= r <= a):
        raise DomainError("need 0 <= r <= a")
    batch = sample_mstar(idx, stream, n, table)
    vals = r ** idx.alpha_mass * batch.values
    return SampleBatch(vals, stream.seed, stream.stream_id, n,
                       f"ball[gamma={idx.gamma:g},r={r:g}]")


def sample_shell_masses(idx: StableIndex, radii, a: float, stream: RngStream,
                        table: CdfTable | None = None) -> SampleBatch:
    """One draw per radial shell (r_{k+1}, r_k] along a spine at level a.

    ``radii`` must be nonincreasing from r_0 <= a; the k-th value is the
    mass of the k-th shell, equal in law to (r_k - r_{k+1})**(g/(g-1)) * M
    with independent M across shells.  A zero-width shell draws exactly 0.
    """
    r = np.asarray(radii, float)
    if r.ndim != 1 or r.size < 2:
        raise DomainError("radii must hold at least two levels")
    if (np.diff(r) > 0).any() or (r < 0).any():
        raise DomainError("radii must be nonincreasing and >= 0")
    if r[0] > a:
        raise DomainError("radii must not exceed the spine level a")
    widths = -np.diff(r)
    batch = sample_mstar(idx, stream, widths.size, table)
    vals = widths ** idx.alpha_mass * batch.values
    return SampleBatch(vals, stream.seed, stream.stream_id, widths.size,
                       f"shells[gamma={idx.gamma:g},k={widths.size}]")
