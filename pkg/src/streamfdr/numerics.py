"""Shared numeric helpers: harmonic numbers in extended precision."""
from __future__ import annotations

import numpy as np

# Cache grows geometrically so repeated calls with increasing n do not
# recompute; the cumsum runs in 80-bit extended precision and is rounded
# to float64 per entry, which keeps H_i drift-free up to n ~ 1e8.
_harmonic_cache = np.zeros(0)


def harmonic_numbers(n: int) -> np.ndarray:
    """Return H_1..H_n as a float64 array, H_i = sum_{j<=i} 1/j."""
    global _harmonic_cache
    if n < 0:
        raise ValueError(f"n must be nonnegative, got {n}")
    if n > _harmonic_cache.size:
        size = max(n, 2 * _harmonic_cache.size, 1024)
        recip = np.reciprocal(np.arange(1, size + 1, dtype=np.longdouble))
        _harmonic_cache = np.cumsum(recip).astype(np.float64)
    return _harmonic_cache[:n]


def harmonic_number(n: int) -> float:
    """Return H_n = sum_{j<=n} 1/j (H_0 = 0)."""
    if n == 0:
        return 0.0
    return float(harmonic_numbers(n)[-1])
