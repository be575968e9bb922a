"""Tiny statistics helpers shared by the verification suite and the tests."""

from __future__ import annotations

import numpy as np

__all__ = ["ks_one_sample", "ks_two_sample", "sample_correlation"]


def ks_one_sample(samples, cdf) -> float:
    """Exact one-sample Kolmogorov-Smirnov statistic against a CDF callable."""
    x = np.sort(np.asarray(samples, float))
    n = x.size
    f = np.asarray(cdf(x), float)
    up = np.abs(f - np.arange(1, n + 1) / n)
    down = np.abs(f - np.arange(0, n) / n)
    return float(max(up.max(), down.max()))


def ks_two_sample(a, b) -> float:
    """Two-sample KS statistic (sup distance between empirical CDFs)."""
    a = np.sort(np.asarray(a, float))
    b = np.sort(np.asarray(b, float))
    everything = np.concatenate([a, b])
    fa = np.searchsorted(a, everything, side="right") / a.size
    fb = np.searchsorted(b, everything, side="right") / b.size
    return float(np.abs(fa - fb).max())


def sample_correlation(x, y) -> float:
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    xc = x - x.mean()
    yc = y - y.mean()
    denom = np.sqrt((xc * xc).sum() * (yc * yc).sum())
    return float((xc * yc).sum() / denom) if denom > 0 else 0.0
