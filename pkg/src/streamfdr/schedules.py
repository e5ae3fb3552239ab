"""Spending schedules: positive sequences beta_1, beta_2, ... allocating a
total error budget alpha across a stream of tests.

Each family fixes a shape f(l); the constructor scales it so the series sums
to alpha over the horizon (infinite by default, or the first n terms). All
values go through one vectorized evaluation path, so scalar and batch
evaluation of the same index agree bit for bit.
"""
from __future__ import annotations

import dataclasses
import enum
import re

import numpy as np
from scipy import special

__all__ = [
    "Family",
    "BetaSchedule",
    "make_power_law",
    "make_log_power",
    "make_log_boost",
    "make_shifted_log",
    "from_descriptor",
]

_PARTIAL_TERMS = 10**7
_CHUNK = 10**6
# Infinite-horizon normalizers must be known to this relative accuracy so the
# schedule's total mass is alpha up to a negligible error.
_REL_MASS_TOL = 1e-9


class Family(enum.Enum):
    """Shape families for spending schedules."""

    POWER_LAW = "power_law"      # f(l) = l^-a, a > 1
    LOG_POWER = "log_power"      # f(l) = 1/(l * ln(max(l,2))^nu), nu > 1
    LOG_BOOST = "log_boost"      # f(l) = ln(l) * l^(-1/kappa), 0 < kappa < 1
    SHIFTED_LOG = "shifted_log"  # f(l) = 1/(l * ln(l+1)^a), a > 1


def _raw_power_law(ell: np.ndarray, a: float) -> np.ndarray:
    return ell ** -a


def _raw_log_power(ell: np.ndarray, nu: float) -> np.ndarray:
    return 1.0 / (ell * np.log(np.maximum(ell, 2.0)) ** nu)


def _raw_log_boost(ell: np.ndarray, kappa: float) -> np.ndarray:
    return np.log(ell) * ell ** (-1.0 / kappa)


def _raw_shifted_log(ell: np.ndarray, a: float) -> np.ndarray:
    return 1.0 / (ell * np.log(ell + 1.0) ** a)


_RAW = {
    Family.POWER_LAW: _raw_power_law,
    Family.LOG_POWER: _raw_log_power,
    Family.LOG_BOOST: _raw_log_boost,
    Family.SHIFTED_LOG: _raw_shifted_log,
}

_PARAM_NAME = {
    Family.POWER_LAW: "a",
    Family.LOG_POWER: "nu",
    Family.LOG_BOOST: "kappa",
    Family.SHIFTED_LOG: "a",
}


def _tail_bracket(family: Family, exponent: float, n: int) -> tuple[float, float]:
    """Bracket sum_{l>n} f(l) by integral bounds; f must be decreasing there."""
    if family is Family.LOG_POWER:
        nu = exponent
        hi = np.log(n) ** (1.0 - nu) / (nu - 1.0)
        lo = np.log(n + 1.0) ** (1.0 - nu) / (nu - 1.0)
    elif family is Family.LOG_BOOST:
        s = 1.0 / exponent

        def integral(t: float) -> float:
            return t ** (1.0 - s) * (np.log(t) / (s - 1.0) + (s - 1.0) ** -2)

        hi = integral(float(n))
        lo = integral(n + 1.0)
    elif family is Family.SHIFTED_LOG:
        a = exponent
        hi = np.log(n) ** (1.0 - a) / (a - 1.0)
        lo = np.log(n + 2.0) ** (1.0 - a) / (a - 1.0)
    else:
        raise AssertionError(family)
    return float(lo), float(hi)


def _chunked_partial_sum(family: Family, exponent: float, n: int) -> float:
    raw = _RAW[family]
    total = 0.0
    for start in range(1, n + 1, _CHUNK):
        ell = np.arange(start, min(start + _CHUNK, n + 1), dtype=np.float64)
        total += float(np.sum(raw(ell, exponent)))
    return total


_normalizer_cache: dict[tuple[str, float], tuple[float, float]] = {}


def _infinite_normalizer(family: Family, exponent: float) -> tuple[float, float]:
    """Return (S, error) with |S - sum_{l>=1} f(l)| <= error."""
    key = (family.value, float(exponent))
    cached = _normalizer_cache.get(key)
    if cached is not None:
        return cached
    if family is Family.POWER_LAW:
        s = float(special.zeta(exponent))
        err = float(4.0 * np.finfo(np.float64).eps * s)
    else:
        partial = _chunked_partial_sum(family, exponent, _PARTIAL_TERMS)
        lo, hi = _tail_bracket(family, exponent, _PARTIAL_TERMS)
        s = partial + 0.5 * (lo + hi)
        err = float(0.5 * (hi - lo) + 64.0 * np.finfo(np.float64).eps * partial)
    if not np.isfinite(s) or err > _REL_MASS_TOL * s:
        raise ValueError(
            f"cannot normalize {family.value} with exponent {exponent!r}: "
            f"series estimate {s!r} has error bound {err!r}"
        )
    _normalizer_cache[key] = (s, err)
    return s, err


@dataclasses.dataclass(frozen=True)
class BetaSchedule:
    """A concrete spending sequence beta_l = scale * f(l).

    Attributes
    ----------
    family : shape family.
    alpha : total budget; the series (or the first `horizon` terms) sums to it.
    exponent : the family's shape parameter (a, nu, or kappa).
    horizon : None for an infinite-horizon schedule, else the number of terms
        the budget is spread over; evaluation past the horizon is an error.
    scale : alpha / normalizer.
    normalizer : sum of f(l) over the horizon.
    normalizer_error : bound on the absolute error of `normalizer` (0 means
        exact up to float rounding).
    monotone_from : index from which the sequence is strictly decreasing.
    """

    family: Family
    alpha: float
    exponent: float
    horizon: int | None
    scale: float
    normalizer: float
    normalizer_error: float
    monotone_from: int

    def eval(self, ell):
        """Evaluate beta at 1-based index/indices `ell` (int or int array)."""
        arr = np.asarray(ell)
        if arr.dtype.kind not in "iu":
            if arr.dtype.kind != "f" or not np.all(np.floor(arr) == arr):
                raise TypeError(f"indices must be integers, got {ell!r}")
        if arr.size and int(arr.min()) < 1:
            raise ValueError("schedule indices are 1-based")
        if self.horizon is not None and arr.size and int(arr.max()) > self.horizon:
            raise ValueError(
                f"index beyond horizon {self.horizon} for finite schedule"
            )
        values = self.scale * _RAW[self.family](arr.astype(np.float64), self.exponent)
        if arr.ndim == 0:
            return float(values)
        return values

    def prefix(self, n: int) -> np.ndarray:
        """Cumulative sums beta_1 + ... + beta_l for l = 1..n."""
        if n < 0:
            raise ValueError(f"n must be nonnegative, got {n}")
        if n == 0:
            return np.zeros(0)
        return np.cumsum(self.eval(np.arange(1, n + 1)))

    def describe(self) -> str:
        """Stable text form; `from_descriptor` reconstructs the schedule."""
        horizon = "inf" if self.horizon is None else str(self.horizon)
        name = _PARAM_NAME[self.family]
        return (
            f"{self.family.value}(alpha={self.alpha!r},"
            f"{name}={self.exponent!r},horizon={horizon})"
        )


def _validate_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must be in (0, 1), got {alpha!r}")
    return alpha


def _make(family: Family, alpha: float, exponent: float, horizon) -> BetaSchedule:
    alpha = _validate_alpha(alpha)
    if horizon is not None:
        horizon = int(horizon)
        if horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {horizon}")
        normalizer = _chunked_partial_sum(family, exponent, horizon)
        error = 0.0
    else:
        normalizer, error = _infinite_normalizer(family, exponent)
    if normalizer <= 0.0:
        raise ValueError(
            f"{family.value} schedule has no positive mass over horizon {horizon}"
        )
    if family is Family.LOG_BOOST:
        monotone_from = max(2, int(np.ceil(np.exp(exponent))))
    else:
        monotone_from = 1
    return BetaSchedule(
        family=family,
        alpha=alpha,
        exponent=float(exponent),
        horizon=horizon,
        scale=alpha / normalizer,
        normalizer=normalizer,
        normalizer_error=error,
        monotone_from=monotone_from,
    )


def make_power_law(alpha: float, a: float = 2.0, horizon: int | None = None) -> BetaSchedule:
    """beta_l proportional to l^-a with a > 1."""
    if not a > 1.0:
        raise ValueError(f"power-law exponent must satisfy a > 1, got {a!r}")
    return _make(Family.POWER_LAW, alpha, a, horizon)


def make_log_power(alpha: float, nu: float = 2.0, horizon: int | None = None) -> BetaSchedule:
    """beta_l proportional to 1/(l * ln(max(l,2))^nu) with nu > 1."""
    if not nu > 1.0:
        raise ValueError(f"log-power exponent must satisfy nu > 1, got {nu!r}")
    return _make(Family.LOG_POWER, alpha, nu, horizon)


def make_log_boost(alpha: float, kappa: float = 0.5, horizon: int | None = None) -> BetaSchedule:
    """beta_l proportional to ln(l) * l^(-1/kappa) with 0 < kappa < 1.

    The first term is zero (ln 1 = 0), so the sequence rises before its
    power-law decay takes over; `monotone_from` records where decay starts.
    """
    if not 0.0 < kappa < 1.0:
        raise ValueError(f"kappa must be in (0, 1), got {kappa!r}")
    if horizon is not None and int(horizon) < 2:
        raise ValueError("log_boost needs horizon >= 2; its first term is zero")
    return _make(Family.LOG_BOOST, alpha, kappa, horizon)


def make_shifted_log(alpha: float, a: float = 2.0, horizon: int | None = None) -> BetaSchedule:
    """beta_l proportional to 1/(l * ln(l+1)^a) with a > 1."""
    if not a > 1.0:
        raise ValueError(f"shifted-log exponent must satisfy a > 1, got {a!r}")
    return _make(Family.SHIFTED_LOG, alpha, a, horizon)


_MAKERS = {
    Family.POWER_LAW: make_power_law,
    Family.LOG_POWER: make_log_power,
    Family.LOG_BOOST: make_log_boost,
    Family.SHIFTED_LOG: make_shifted_log,
}

_DESCRIPTOR_RE = re.compile(
    r"^(?P<family>\w+)\(alpha=(?P<alpha>[^,]+),(?P<pname>\w+)=(?P<pval>[^,]+),"
    r"horizon=(?P<horizon>\w+)\)$"
)


def from_descriptor(text: str) -> BetaSchedule:
    """Rebuild a schedule from `BetaSchedule.describe()` output."""
    match = _DESCRIPTOR_RE.match(text.strip())
    if match is None:
        raise ValueError(f"unrecognized schedule descriptor: {text!r}")
    try:
        family = Family(match["family"])
    except ValueError:
        raise ValueError(f"unknown schedule family in descriptor: {text!r}") from None
    if match["pname"] != _PARAM_NAME[family]:
        raise ValueError(
            f"descriptor parameter {match['pname']!r} does not belong to "
            f"{family.value} (expected {_PARAM_NAME[family]!r})"
        )
    horizon = None if match["horizon"] == "inf" else int(match["horizon"])
    maker = _MAKERS[family]
    return maker(float(match["alpha"]), float(match["pval"]), horizon)
