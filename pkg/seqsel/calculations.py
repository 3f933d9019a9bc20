from __future__ import annotations

from collections.abc import Iterable

import numpy as np


def safe_ratio(numerator, denominator):
    """Element-wise numerator / denominator with 0 wherever the denominator is 0."""
    num = np.asarray(numerator, dtype=float)
    den = np.asarray(denominator, dtype=float)
    out = np.zeros(np.broadcast(num, den).shape, dtype=float)
    np.divide(num, den, out=out, where=den != 0)
    if out.ndim == 0:
        return float(out)
    return out


def harmonic_mean(a, b):
    """Element-wise 2ab / (a + b), 0 where a + b is 0."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return safe_ratio(2.0 * a * b, a + b)


def population_std(values: Iterable[float]) -> float:
    arr = np.asarray(list(values), dtype=float)
    if arr.size == 0:
        raise ValueError("population_std needs at least one value")
    return float(arr.std(ddof=0))


def l1_distance(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.abs(a - b).sum())
