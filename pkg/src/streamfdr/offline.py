"""Offline step-up baselines over a full batch of p-values."""
from __future__ import annotations

import dataclasses

import numpy as np

from .numerics import harmonic_number

__all__ = ["BhResult", "bh", "bh_adjusted"]


@dataclasses.dataclass(frozen=True)
class BhResult:
    """Outcome of a step-up pass.

    threshold : largest sorted p-value under the line alpha*i/n (0.0 when no
        p-value crosses); every p <= threshold is rejected.
    rejected : boolean mask in the original input order.
    num_rejected : rejection count; equals the crossing index because
        duplicates of the threshold cannot sit above it.
    """

    threshold: float
    rejected: np.ndarray
    num_rejected: int


def _validate(pvalues, alpha: float) -> tuple[np.ndarray, float]:
    p = np.asarray(pvalues, dtype=np.float64)
    if p.ndim != 1:
        raise ValueError(f"p-values must be a 1-d vector, got shape {p.shape}")
    if p.size and (not np.all(np.isfinite(p)) or p.min() < 0.0 or p.max() > 1.0):
        raise ValueError("p-values must all lie in [0, 1]")
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha!r}")
    return p, alpha


def bh(pvalues, alpha: float) -> BhResult:
    """Step-up rule: reject the i_max smallest p-values, where i_max is the
    largest i with p_(i) <= alpha * i / n (i_max = 0 if none)."""
    p, alpha = _validate(pvalues, alpha)
    n = p.size
    if n == 0:
        return BhResult(0.0, np.zeros(0, dtype=bool), 0)
    sorted_p = np.sort(p)
    crossed = sorted_p <= alpha * np.arange(1, n + 1) / n
    hits = np.flatnonzero(crossed)
    if hits.size == 0:
        return BhResult(0.0, np.zeros(n, dtype=bool), 0)
    i_max = int(hits[-1]) + 1
    threshold = float(sorted_p[i_max - 1])
    rejected = p <= threshold
    return BhResult(threshold, rejected, int(np.count_nonzero(rejected)))


def bh_adjusted(pvalues, alpha: float) -> BhResult:
    """Step-up rule at the harmonically rescaled level alpha / H_n, which
    keeps the guarantee under arbitrary dependence."""
    p, alpha = _validate(pvalues, alpha)
    if p.size == 0:
        return BhResult(0.0, np.zeros(0, dtype=bool), 0)
    return bh(p, alpha / harmonic_number(p.size))
