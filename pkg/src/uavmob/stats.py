"""Goodness-of-fit helpers for comparing samples with analytic CDFs."""

from __future__ import annotations

import numpy as np

__all__ = ["ks_distance", "ks_critical", "max_abs_diff"]


def ks_distance(samples, cdf) -> float:
    """One-sample Kolmogorov-Smirnov statistic ``sup |F_n - F|``.

    ``cdf`` is a vectorized callable.  The supremum is attained at a sample
    point, on one side or the other of the jump.
    """
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n == 0:
        raise ValueError("ks_distance needs at least one sample")
    f = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))


def ks_critical(n: int, alpha: float = 0.001) -> float:
    """Asymptotic KS critical value ``sqrt(-ln(alpha/2) / 2) / sqrt(n)``."""
    return float(np.sqrt(-np.log(alpha / 2.0) / 2.0) / np.sqrt(n))


def max_abs_diff(a, b) -> float:
    return float(np.max(np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))))
