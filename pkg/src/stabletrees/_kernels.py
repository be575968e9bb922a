"""Hot inner loops of the tree simulator.

Every kernel exists twice: a numba ``@njit`` version (the default) and a
pure-NumPy fallback with identical semantics.  Set the environment variable
``STABLETREES_NO_NUMBA=1`` before import to force the fallback; the active
backend is reported in ``BACKEND``.  ``benchmarks/bench_kernels.py`` times
the two side by side.

All kernels work on the cell representation of an excursion: ``H`` holds
n+1 grid heights, ``cmin[i]`` the exact sampled minimum of the path inside
cell [i/n, (i+1)/n] (so ``cmin[i] <= min(H[i], H[i+1])``).  The branch
height between two grid times is the minimum of the spanned cell minima,
distributed exactly like the continuum minimum, so tree distances carry no
grid-truncation bias.
"""

from __future__ import annotations

import os

import numpy as np

_want_numba = os.environ.get("STABLETREES_NO_NUMBA", "0").lower() not in ("1", "true", "yes")

if _want_numba:
    try:
        from numba import njit

        HAVE_NUMBA = True
    except ImportError:
        HAVE_NUMBA = False
else:
    HAVE_NUMBA = False

BACKEND = "numba" if HAVE_NUMBA else "numpy"


def _ball_count_py(H, cmin, t, r):
    """#cells s with d(s, t) < r, scanning outward with early exit.

    d(s, t) = H[s] + H[t] - 2 b(s, t) with b the minimum of the cell minima
    between s and t; once the running minimum drops to H[t] - r, every
    farther cell is outside the ball and the scan stops.
    """
    n = cmin.size
    ht = H[t]
    cnt = 0
    m = ht
    for s in range(t, n):
        if s > t:
            if cmin[s - 1] < m:
                m = cmin[s - 1]
            if ht - m >= r:
                break
        b = m if m < H[s] else H[s]
        if H[s] + ht - 2.0 * b < r:
            cnt += 1
    m = ht
    for s in range(t - 1, -1, -1):
        if cmin[s] < m:
            m = cmin[s]
        if ht - m >= r:
            break
        if H[s] + ht - 2.0 * m < r:
            cnt += 1
    return cnt


def _ball_distances_py(H, cmin, t, out):
    """Fill out[s] = d(s, t) for every cell s (full sweep, no early exit)."""
    n = cmin.size
    ht = H[t]
    m = ht
    for s in range(t, n):
        if s > t:
            if cmin[s - 1] < m:
                m = cmin[s - 1]
        b = m if m < H[s] else H[s]
        out[s] = H[s] + ht - 2.0 * b
    m = ht
    for s in range(t - 1, -1, -1):
        if cmin[s] < m:
            m = cmin[s]
        out[s] = H[s] + ht - 2.0 * m
    return out


def _extremal_counts_py(H, cmin, step, r):
    """(min, max) of the ball cell count over centers 0, step, 2 step, ..."""
    n = cmin.size
    best_lo = n + 1
    best_hi = -1
    for t in range(0, n, step):
        c = _ball_count_py(H, cmin, t, r)
        if c < best_lo:
            best_lo = c
        if c > best_hi:
            best_hi = c
    return best_lo, best_hi


def _ball_counts_many_py(H, cmin, centers, r, out):
    for i in range(centers.size):
        out[i] = _ball_count_py(H, cmin, centers[i], r)
    return out


def _occupation_count_py(H, a, eps):
    """#cells whose representative height lies in (a - eps, a]."""
    cnt = 0
    for s in range(H.size - 1):
        if a - eps < H[s] <= a:
            cnt += 1
    return cnt


def _count_high_excursions_py(H, a, eps):
    """#excursion intervals of H above level a whose maximum exceeds a + eps."""
    cnt = 0
    inside = False
    peak = a
    for s in range(H.size):
        h = H[s]
        if h > a:
            if not inside:
                inside = True
                peak = h
            elif h > peak:
                peak = h
        else:
            if inside and peak > a + eps:
                cnt += 1
            inside = False
    if inside and peak > a + eps:
        cnt += 1
    return cnt


if HAVE_NUMBA:
    _ball_count = njit(cache=True)(_ball_count_py)
    _ball_distances = njit(cache=True)(_ball_distances_py)
    _occupation_count = njit(cache=True)(_occupation_count_py)
    _count_high_excursions = njit(cache=True)(_count_high_excursions_py)

    @njit(cache=True)
    def _extremal_counts(H, cmin, step, r):
        n = cmin.size
        best_lo = n + 1
        best_hi = -1
        for t in range(0, n, step):
            c = _ball_count(H, cmin, t, r)
            if c < best_lo:
                best_lo = c
            if c > best_hi:
                best_hi = c
        return best_lo, best_hi

    @njit(cache=True)
    def _ball_counts_many(H, cmin, centers, r, out):
        for i in range(centers.size):
            out[i] = _ball_count(H, cmin, centers[i], r)
        return out

else:

    def _ball_distances(H, cmin, t, out):
        # right of the center: running min of [H[t], cmin[t], ..., cmin[s-1]];
        # cmin[s-1] <= H[s] keeps the explicit min with H[s] exact
        n = cmin.size
        ht = H[t]
        if t < n:
            m_right = np.minimum.accumulate(np.concatenate(([ht], cmin[t:n - 1])))
            Hs = H[t:n]
            out[t:n] = Hs + ht - 2.0 * np.minimum(m_right, Hs)
        if t > 0:
            m_left = np.minimum.accumulate(cmin[:t][::-1])
            out[:t] = (H[:t][::-1] + ht - 2.0 * m_left)[::-1]
        return out

    def _ball_count(H, cmin, t, r):
        d = np.empty(cmin.size)
        _ball_distances(H, cmin, t, d)
        return int(np.count_nonzero(d < r))

    def _extremal_counts(H, cmin, step, r):
        n = cmin.size
        best_lo = n + 1
        best_hi = -1
        d = np.empty(n)
        for t in range(0, n, step):
            _ball_distances(H, cmin, t, d)
            c = int(np.count_nonzero(d < r))
            if c < best_lo:
                best_lo = c
            if c > best_hi:
                best_hi = c
        return best_lo, best_hi

    def _ball_counts_many(H, cmin, centers, r, out):
        d = np.empty(cmin.size)
        for i in range(centers.size):
            _ball_distances(H, cmin, int(centers[i]), d)
            out[i] = int(np.count_nonzero(d < r))
        return out

    def _occupation_count(H, a, eps):
        body = H[:-1]
        return int(np.count_nonzero((body > a - eps) & (body <= a)))

    def _count_high_excursions(H, a, eps):
        above = H > a
        starts = np.flatnonzero(above & ~np.concatenate(([False], above[:-1])))
        ends = np.flatnonzero(above & ~np.concatenate((above[1:], [False])))
        cnt = 0
        for s, e in zip(starts, ends):
            if H[s:e + 1].max() > a + eps:
                cnt += 1
        return int(cnt)


def warmup():
    """Trigger JIT compilation on tiny inputs (no-op on the numpy backend)."""
    H = np.array([0.0, 0.5, 1.0, 0.5, 0.0])
    cmin = np.array([0.0, 0.45, 0.45, 0.0])
    _ball_count(H, cmin, 2, 0.3)
    _ball_distances(H, cmin, 2, np.empty(4))
    _extremal_counts(H, cmin, 1, 0.3)
    _ball_counts_many(H, cmin, np.array([0, 2], dtype=np.int64), 0.3,
                      np.empty(2, dtype=np.int64))
    _occupation_count(H, 0.5, 0.2)
    _count_high_excursions(H, 0.2, 0.1)
