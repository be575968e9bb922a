"""Explicit distribution tails, the coefficient machinery and gauge functions.

Brownian-case laws come with two convergent representations each: a direct
exponential series (fast for moderate-to-large arguments) and a modular /
theta-transformed dual (fast and cancellation-free for small arguments,
where the probabilities are of size exp(-1/y)).  Every dual representation
is validated against its direct series at y = 1 to 1e-12 the first time it
is used; results carry certified remainder bounds in a
:class:`SeriesAccumulator`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special as sc

from . import kappa as _kappa
from .errors import DomainError, NumericError
from .index import StableIndex

__all__ = [
    "SeriesAccumulator",
    "CoeffTable",
    "c_gamma",
    "c_gamma_quadrature",
    "c_gamma_series",
    "expansion_coeffs",
    "small_ball_asymptotic",
    "stable_cdf_gamma2",
    "brownian_ball_tail",
    "brownian_ball_cdf",
    "brownian_mstar_tail",
    "brownian_mstar_cdf_small",
    "fixed_point_residual",
    "gauge_eval",
    "debruijn_ratio",
    "GAUGE_KINDS",
]

_PI2 = math.pi ** 2


@dataclass(frozen=True)
class SeriesAccumulator:
    """A truncated-series value with an error certificate."""

    value: float
    terms_used: int
    remainder_bound: float

    def __post_init__(self):
        if not math.isfinite(self.remainder_bound) or self.remainder_bound < 0.0:
            raise NumericError("remainder bound must be finite and >= 0",
                               detail=self.remainder_bound)

    def __float__(self):
        return self.value


# ---------------------------------------------------------------------------
# the constant C_gamma, two independent ways
# ---------------------------------------------------------------------------

def c_gamma_quadrature(idx: StableIndex) -> float:
    """C = integral_0^1 u^-1 ((1-u)^-(gamma-1)/gamma - 1) du by quadrature."""
    return _kappa._tables(idx.gamma).C


def c_gamma_series(idx: StableIndex, n_terms: int = 200_000) -> tuple[float, float]:
    """C as the accelerated partial sum of sum_n (1/n) |binom((1-gamma)/gamma, n)|.

    The raw terms a_n decay like n^(-1-1/gamma), far too slowly for direct
    summation, so the two leading asymptotic layers are summed in closed
    zeta form and only the O(n^(-3-1/gamma)) remainder is accumulated.
    Returns (value, tail_bound).
    """
    g = idx.gamma
    inv = 1.0 / g
    s0 = 1.0 + inv
    gamma_fac = sc.gamma(1.0 - inv)
    g1 = -(inv) * (1.0 - inv) / 2.0          # Gamma(n+1-1/g)/Gamma(n+1) ~ n^-1/g (1 + g1/n)

    n = np.arange(1, n_terms + 1)
    a = np.cumprod(1.0 - 1.0 / (g * n)) / n
    t = (n ** (-s0) + g1 * n ** (-s0 - 1.0)) / gamma_fac
    diff = a - t
    head = (sc.zeta(s0) + g1 * sc.zeta(s0 + 1.0)) / gamma_fac
    value = head + float(diff.sum())
    # |diff_n| ~ c n^-(3+1/g): tail <= |diff_N| * N / (2 + 1/g)
    tail = abs(float(diff[-1])) * n_terms / (2.0 + inv)
    return value, tail


def c_gamma(idx: StableIndex, tol: float = 1e-10) -> float:
    """C_gamma by quadrature, cross-checked against the accelerated series.

    Raises :class:`NumericError` if the independent routes differ by more
    than ``10 * tol``.
    """
    if not (tol > 0.0):
        raise DomainError("tol must be > 0")
    quad_val = c_gamma_quadrature(idx)
    ser_val, ser_tail = c_gamma_series(idx)
    gap = abs(quad_val - ser_val)
    if gap > 10.0 * tol + ser_tail:
        raise NumericError(
            "C_gamma dual-method disagreement",
            detail={"quadrature": quad_val, "series": ser_val, "gap": gap},
        )
    return quad_val


# ---------------------------------------------------------------------------
# expansion coefficients a_n, c_n
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CoeffTable:
    """Coefficients a_n of h(y) = sum a_n y^n and c_n of exp(-h(y)).

    a_n = (1/n) prod_{k<=n} (1 - 1/(gamma k)), each in (0, 1);
    sum |c_n| <= exp(C_gamma).
    """

    gamma: StableIndex
    a: np.ndarray
    c: np.ndarray
    C_gamma: float

    def __post_init__(self):
        a_body = self.a[1:]
        if a_body.size and not ((a_body > 0.0).all() and (a_body < 1.0).all()):
            raise NumericError("a_n must lie in (0, 1)", detail=self.a)
        bound = math.exp(self.C_gamma) * (1.0 + 1e-12)
        total = float(np.abs(self.c).sum())
        if total > bound:
            raise NumericError("sum |c_n| exceeds exp(C_gamma)",
                               detail={"sum": total, "bound": bound})


def expansion_coeffs(idx: StableIndex, n_terms: int) -> CoeffTable:
    """Build a_1..a_N by the product formula and c_0..c_N by the
    exponential-of-a-series recurrence n c_n = -sum_k k a_k c_{n-k}."""
    if n_terms < 1:
        raise DomainError("n_terms must be >= 1")
    n = np.arange(1, n_terms + 1)
    a = np.empty(n_terms + 1)
    a[0] = 0.0
    a[1:] = np.cumprod(1.0 - 1.0 / (idx.gamma * n)) / n
    c = np.zeros(n_terms + 1)
    c[0] = 1.0
    ka = np.arange(n_terms + 1) * a
    for m in range(1, n_terms + 1):
        c[m] = -float(np.dot(ka[1:m + 1], c[m - 1::-1])) / m
    return CoeffTable(gamma=idx, a=a, c=c, C_gamma=c_gamma_quadrature(idx))


# ---------------------------------------------------------------------------
# small-ball asymptotics and the positive stable law at gamma = 2
# ---------------------------------------------------------------------------

def small_ball_asymptotic(idx: StableIndex, y: float, variant: str = "mass") -> float:
    """Leading small-y approximation of P(M <= (gamma-1) y).

    variant="mass":   exp(C_gamma) sqrt(gamma(gamma-1)/(2 pi)) y^((gamma-1)/2) exp(-1/y^(gamma-1))
    variant="stable": the same without the exp(C_gamma) factor, approximating
                      the positive stable law P(S <= (gamma-1) y).
    """
    if not (0.0 < y < 1.0):
        raise DomainError("small_ball_asymptotic needs y in (0, 1)")
    if variant not in ("mass", "stable"):
        raise DomainError(f"unknown variant {variant!r}")
    g = idx.gamma
    base = math.sqrt(g * (g - 1.0) / (2.0 * math.pi))
    if variant == "mass":
        base *= math.exp(c_gamma_quadrature(idx))
    return base * y ** ((g - 1.0) / 2.0) * math.exp(-y ** (1.0 - g))


def stable_cdf_gamma2(y: float) -> float:
    """P(S <= y) for the stable law with E exp(-lam S) = exp(-2 sqrt(lam)).

    Closed form erfc(1/sqrt(y)); the gamma = 2 oracle for inversion and
    sampling of the positive stable component.
    """
    if not (y > 0.0):
        raise DomainError("stable_cdf_gamma2 needs y > 0")
    return float(sc.erfc(1.0 / math.sqrt(y)))


# ---------------------------------------------------------------------------
# Brownian ball-mass tail and its theta-dual CDF
# ---------------------------------------------------------------------------

def _geom_tail(next_term: float, ratio: float) -> float:
    if next_term == 0.0:
        return 0.0
    return next_term / (1.0 - min(ratio, 0.999999))


@lru_cache(maxsize=128)
def _validate_ball_dual(c: float) -> bool:
    """Direct series vs theta-dual at y = 1 must agree to 1e-12 before the
    dual may be used.  Cached per opening c."""
    direct = 1.0 - _ball_tail_direct(c, 1.0, 1e-15)[0]
    dual = _ball_cdf_dual(c, 1.0)
    if abs(direct - dual) > 1e-12:
        raise NumericError("theta-dual validation failed for ball CDF",
                           detail={"c": c, "direct": direct, "dual": dual})
    return True


def _ball_tail_direct(c: float, y: float, tol: float) -> tuple[float, int, float]:
    alpha = _PI2 / (4.0 * (1.0 + c) ** 2)
    pref = 2.0 / (1.0 + c)
    total = 0.0
    terms = 0
    # odd-square sum
    n = 0
    while True:
        t = pref * math.exp(-alpha * (2 * n + 1) ** 2 * y)
        total += t
        terms += 1
        n += 1
        nxt = pref * math.exp(-alpha * (2 * n + 1) ** 2 * y)
        if nxt <= tol * max(abs(total), 1e-300) and _geom_tail(nxt, math.exp(-8.0 * alpha * y * (n + 1))) <= tol:
            rem1 = _geom_tail(nxt, math.exp(-8.0 * alpha * y * (n + 1)))
            break
        if n > 100_000:
            raise NumericError("ball-tail series stalled", detail={"c": c, "y": y})
    # full-square sum
    m = 1
    sub = 0.0
    while True:
        t = 2.0 * math.exp(-_PI2 * m * m * y)
        sub += t
        terms += 1
        m += 1
        nxt = 2.0 * math.exp(-_PI2 * m * m * y)
        if nxt <= tol * max(abs(total - sub), 1e-300) and _geom_tail(nxt, math.exp(-_PI2 * y * (2 * m + 1))) <= tol:
            rem2 = _geom_tail(nxt, math.exp(-_PI2 * y * (2 * m + 1)))
            break
        if m > 100_000:
            raise NumericError("ball-tail series stalled", detail={"c": c, "y": y})
    return total - sub, terms, rem1 + rem2


def _theta_sum(scale: float, y: float) -> float:
    """sum_{n>=1} exp(-scale * n^2 / y); converges in a handful of terms."""
    s = 0.0
    n = 1
    while True:
        e = scale * n * n / y
        if e > 745.0:
            break
        s += math.exp(-e)
        n += 1
        if n > 10_000:
            break
    return s


def _ball_cdf_dual(c: float, y: float) -> float:
    """(2/sqrt(pi y)) [ S(1) + S((1+c)^2) - 2 S(4(1+c)^2) ], S(k) = sum e^{-k n^2/y}."""
    b2 = (1.0 + c) ** 2
    pref = 2.0 / math.sqrt(math.pi * y)
    return pref * (_theta_sum(1.0, y) + _theta_sum(b2, y) - 2.0 * _theta_sum(4.0 * b2, y))


def _log_ball_cdf_dual(c: float, y: float) -> float:
    """log of the dual CDF with the leading exp(-1/y) factored out, usable
    far below the double underflow threshold."""
    b2 = (1.0 + c) ** 2
    # leading exponent is exp(-1/y); factor it out of every theta term
    def _shifted(scale):
        s = 0.0
        n = 1
        while True:
            e = (scale * n * n - 1.0) / y
            if e > 745.0:
                break
            s += math.exp(-e)
            n += 1
        return s
    inner = _shifted(1.0) + _shifted(b2) - 2.0 * _shifted(4.0 * b2)
    if inner <= 0.0:
        raise NumericError("log ball CDF lost all precision", detail={"c": c, "y": y})
    return math.log(2.0 / math.sqrt(math.pi * y)) - 1.0 / y + math.log(inner)


_BALL_DUAL_SWITCH = 0.5


def brownian_ball_tail(c: float, y: float, tol: float = 1e-12) -> SeriesAccumulator:
    """P(ball mass >= y) for the unit-conditioned Brownian tree ball of
    opening c: the double exponential series

        (2/(1+c)) sum_{n>=0} exp(-pi^2 (2n+1)^2 y / (4(1+c)^2))
        - 2 sum_{n>=1} exp(-pi^2 n^2 y).

    For y below the crossover the complement of the theta-dual CDF is used
    instead (the direct series cancels catastrophically there).
    """
    if not (y > 0.0):
        raise DomainError("brownian_ball_tail needs y > 0")
    if c < 0.0:
        raise DomainError("opening c must be >= 0")
    if y < _BALL_DUAL_SWITCH:
        _validate_ball_dual(c)
        cdf = _ball_cdf_dual(c, y)
        return SeriesAccumulator(value=1.0 - cdf, terms_used=0, remainder_bound=1e-15 + abs(cdf) * 1e-14)
    value, terms, rem = _ball_tail_direct(c, y, tol)
    return SeriesAccumulator(value=value, terms_used=terms, remainder_bound=rem)


def brownian_ball_cdf(c: float, y: float, tol: float = 1e-12) -> SeriesAccumulator:
    """P(ball mass <= y), cancellation-free at small y via the theta dual."""
    if not (y > 0.0):
        raise DomainError("brownian_ball_cdf needs y > 0")
    if c < 0.0:
        raise DomainError("opening c must be >= 0")
    if y < _BALL_DUAL_SWITCH:
        _validate_ball_dual(c)
        return SeriesAccumulator(value=_ball_cdf_dual(c, y), terms_used=0,
                                 remainder_bound=1e-15)
    value, terms, rem = _ball_tail_direct(c, y, tol)
    return SeriesAccumulator(value=1.0 - value, terms_used=terms, remainder_bound=rem)


# ---------------------------------------------------------------------------
# Brownian spinal-mass (M) tail and cancellation-free CDF
# ---------------------------------------------------------------------------

def brownian_mstar_tail(y: float, tol: float = 1e-12) -> SeriesAccumulator:
    """P(M >= y) = sum_{n>=0} 4 (2/(pi^2 (2n+1)^2) + y) exp(-pi^2 (2n+1)^2 y / 4)."""
    if not (y > 0.0):
        raise DomainError("brownian_mstar_tail needs y > 0")
    total = 0.0
    n = 0
    while True:
        a = _PI2 * (2 * n + 1) ** 2 / 4.0
        t = 4.0 * (2.0 / (_PI2 * (2 * n + 1) ** 2) + y) * math.exp(-a * y)
        total += t
        n += 1
        a_next = _PI2 * (2 * n + 1) ** 2 / 4.0
        nxt = 4.0 * (2.0 / (_PI2 * (2 * n + 1) ** 2) + y) * math.exp(-a_next * y)
        ratio = math.exp(-2.0 * _PI2 * y * (n + 1))
        if nxt <= tol * max(total, 1e-300) and _geom_tail(nxt, ratio) <= tol:
            rem = _geom_tail(nxt, ratio)
            break
        if n > 100_000:
            raise NumericError("mstar-tail series stalled", detail={"y": y})
    value = min(total, 1.0)
    return SeriesAccumulator(value=value, terms_used=n, remainder_bound=rem + max(total - 1.0, 0.0))


@lru_cache(maxsize=1)
def _validate_mstar_dual() -> bool:
    direct = 1.0 - brownian_mstar_tail(1.0, 1e-15).value
    dual = _mstar_cdf_erfc(1.0)
    if abs(direct - dual) > 1e-12:
        raise NumericError("theta-dual validation failed for M CDF",
                           detail={"direct": direct, "dual": dual})
    return True


def _mstar_cdf_erfc(y: float) -> float:
    """P(M <= y) = 4 sum n erfc(n/sqrt(y)) - 16 sum n erfc(2n/sqrt(y)).

    This is the identity P(M<=y) = 2 int_0^y A - 4 y A(y) with the odd theta
    sum A evaluated through its modular transformation and then integrated
    term by term; only complementary error functions survive.
    """
    rt = math.sqrt(y)
    s = 0.0
    n = 1
    while True:
        t1 = 4.0 * n * float(sc.erfc(n / rt))
        t2 = 16.0 * n * float(sc.erfc(2.0 * n / rt))
        s += t1 - t2
        if t1 < 1e-18 * max(s, 1e-300) and n > 2:
            break
        n += 1
        if n > 100_000:
            break
    return s


_MSTAR_DUAL_SWITCH = 1.5


def brownian_mstar_cdf_small(y: float, tol: float = 1e-12) -> float:
    """P(M <= y) without catastrophic cancellation, exact down to the
    underflow scale exp(-1/y).

    Uses the erfc (modular) representation below the crossover and the
    complement of the direct tail series above it.  The dual representation
    is validated against the direct series at y = 1 on first use.
    """
    if not (y > 0.0):
        raise DomainError("brownian_mstar_cdf_small needs y > 0")
    _validate_mstar_dual()
    if y > _MSTAR_DUAL_SWITCH:
        return 1.0 - brownian_mstar_tail(y, tol).value
    value = _mstar_cdf_erfc(y)
    if y > 4e-3 and value == 0.0:
        raise NumericError("mstar CDF lost all precision", detail={"y": y})
    return value


# ---------------------------------------------------------------------------
# fixed-point identity residual
# ---------------------------------------------------------------------------

def fixed_point_residual(idx: StableIndex, lam: float, n_terms: int) -> float:
    """| L - e^C e^{-gamma lam^beta} (1 + sum_{n<=N} c_n L^n) | with
    L = E[e^{-lam M}] = 1 - kappa_1(lam, 0)^gamma / lam."""
    if not (lam > 0.0):
        raise DomainError("fixed_point_residual needs lam > 0")
    L = _kappa.mstar_transform_value(idx, lam)
    table = expansion_coeffs(idx, n_terms)
    powers = L ** np.arange(1, n_terms + 1)
    rhs = math.exp(table.C_gamma) * math.exp(-idx.gamma * lam ** idx.beta) * (
        1.0 + float(np.dot(table.c[1:], powers))
    )
    return abs(L - rhs)


# ---------------------------------------------------------------------------
# gauge functions
# ---------------------------------------------------------------------------

GAUGE_KINDS = ("g_gamma", "f_gamma", "g_brownian", "f_brownian")


def gauge_eval(kind: str, idx: StableIndex | None, r: float) -> float:
    """Evaluate a normalizing gauge.

    g_gamma(r)    = r^(gamma/(gamma-1)) / (log log 1/r)^(1/(gamma-1)),  r in (0, 1/e)
    f_gamma(r)    = r^(gamma/(gamma-1)) / (log 1/r)^(1/(gamma-1)),      r in (0, 1)
    g_brownian(r) = r^2 log log 1/r,                                    r in (0, 1/e)
    f_brownian(r) = r^2 log 1/r,                                        r in (0, 1)
    """
    if kind not in GAUGE_KINDS:
        raise DomainError(f"unknown gauge kind {kind!r}")
    if kind in ("g_gamma", "f_gamma") and idx is None:
        raise DomainError(f"gauge {kind} needs a stable index")
    if kind.startswith("g_"):
        if not (0.0 < r < math.exp(-1.0)):
            raise DomainError(f"{kind} needs r in (0, 1/e), got {r!r}")
    else:
        if not (0.0 < r < 1.0):
            raise DomainError(f"{kind} needs r in (0, 1), got {r!r}")
    log_inv = math.log(1.0 / r)
    if kind == "g_gamma":
        return r ** idx.alpha_mass / math.log(log_inv) ** idx.alpha_inv
    if kind == "f_gamma":
        return r ** idx.alpha_mass / log_inv ** idx.alpha_inv
    if kind == "g_brownian":
        return r * r * math.log(log_inv)
    return r * r * log_inv


# ---------------------------------------------------------------------------
# De Bruijn (Tauberian) ratio
# ---------------------------------------------------------------------------

def debruijn_ratio(idx: StableIndex, c: float, y: float) -> float:
    """-log P(ball mass <= y | height > 1) / ((gamma-1)/y)^(gamma-1).

    Tends to 1 as y -> 0.  The Brownian case uses the cancellation-free
    theta-dual log-CDF; other gamma invert the ball transform numerically
    (feasible only down to moderate y, where the CDF is representable).
    """
    if not (y > 0.0):
        raise DomainError("debruijn_ratio needs y > 0")
    if c < 0.0:
        raise DomainError("opening c must be >= 0")
    g = idx.gamma
    denom = ((g - 1.0) / y) ** (g - 1.0)
    if idx.is_brownian:
        _validate_ball_dual(c)
        return -_log_ball_cdf_dual(c, y) / denom
    from . import laplace as _laplace
    cdf = _laplace.invert_cdf_at(_kappa.ball_mass_transform(idx, c), y)
    if cdf <= 0.0:
        raise NumericError("inverted CDF nonpositive; y too small for this gamma",
                           detail={"gamma": g, "y": y, "cdf": cdf})
    return -math.log(cdf) / denom
