"""Special functions and closed-form theoretical quantities: normal and
Student-t CDFs, the mixture alternative's p-value law, the long-run discovery
rate of the schedule-restarting rule, and the near-linear growth bound for
the discovery-count-scaled rule.
"""
from __future__ import annotations

import dataclasses

import numpy as np
from scipy import special

from .schedules import BetaSchedule

__all__ = [
    "AlternativeModel",
    "RateBoundParams",
    "normal_cdf",
    "normal_quantile",
    "t_cdf",
    "alt_cdf",
    "alt_cdf_lower_bound",
    "marginal_cdf",
    "lord_rate",
    "lond_rate_bound",
]


def normal_cdf(x):
    """Phi(x), the standard normal CDF; accepts scalars or arrays."""
    out = special.ndtr(np.asarray(x, dtype=np.float64))
    return float(out) if out.ndim == 0 else out


def normal_quantile(q):
    """Phi^-1(q) for q in (0, 1); accepts scalars or arrays."""
    arr = np.asarray(q, dtype=np.float64)
    if arr.size and (arr.min() <= 0.0 or arr.max() >= 1.0):
        raise ValueError("quantile argument must lie strictly inside (0, 1)")
    out = special.ndtri(arr)
    return float(out) if out.ndim == 0 else out


def t_cdf(t, df):
    """Student-t CDF with df >= 1 degrees of freedom."""
    df = float(df)
    if not df >= 1.0:
        raise ValueError(f"degrees of freedom must be >= 1, got {df!r}")
    out = special.stdtr(df, np.asarray(t, dtype=np.float64))
    return float(out) if out.ndim == 0 else out


@dataclasses.dataclass(frozen=True)
class AlternativeModel:
    """Two-group mixture: a test is non-null with probability epsilon, and a
    non-null z-statistic is N(mu, 1)."""

    mu: float
    epsilon: float

    def __post_init__(self):
        if not np.isfinite(self.mu):
            raise ValueError(f"mu must be finite, got {self.mu!r}")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must be in [0, 1], got {self.epsilon!r}")


def alt_cdf(nu, model: AlternativeModel):
    """P(p <= nu) for a non-null two-sided p-value.

    Equals Phi(-zeta - mu) + Phi(mu - zeta) with zeta = -Phi^-1(nu/2); the
    two-tail form avoids cancellation for small nu. Accepts scalars or
    arrays with entries in [0, 1].
    """
    arr = np.asarray(nu, dtype=np.float64)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
        raise ValueError("nu must lie in [0, 1]")
    out = np.zeros(arr.shape)
    pos = arr > 0.0
    if pos.any():
        zeta = -special.ndtri(arr[pos] / 2.0)
        mu = model.mu
        out[pos] = special.ndtr(-zeta - mu) + special.ndtr(mu - zeta)
    return float(out[0]) if scalar else out


def alt_cdf_lower_bound(nu, model: AlternativeModel):
    """Closed-form lower bound (nu/4) e^(-mu^2/2) e^(|mu| sqrt(log(2/nu))),
    valid once sqrt(log(2/nu)) is below the two-sided quantile of nu."""
    arr = np.asarray(nu, dtype=np.float64)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if arr.size and (arr.min() <= 0.0 or arr.max() > 1.0):
        raise ValueError("nu must lie in (0, 1]")
    mu = abs(model.mu)
    out = (arr / 4.0) * np.exp(-0.5 * mu * mu) * np.exp(mu * np.sqrt(np.log(2.0 / arr)))
    return float(out[0]) if scalar else out


def marginal_cdf(x, model: AlternativeModel):
    """Mixture CDF G(x) = (1 - epsilon) x + epsilon F(x) of an arbitrary
    p-value in the stream; G(0) = 0, G(1) = 1, nondecreasing."""
    arr = np.asarray(x, dtype=np.float64)
    scalar = arr.ndim == 0
    if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
        raise ValueError("x must lie in [0, 1]")
    eps = model.epsilon
    out = (1.0 - eps) * arr + eps * alt_cdf(arr, model)
    return float(out) if scalar else out


_RATE_CHUNK = 1 << 16
_RATE_CAP = 10**8
_RATE_REL_STOP = 1e-12
_RATE_CERT_TOL = 1e-9


def lord_rate(schedule: BetaSchedule, model: AlternativeModel,
              rel_stop: float = _RATE_REL_STOP) -> float:
    """Long-run discovery rate of the schedule-restarting rule under the
    mixture model.

    Discoveries form a renewal process whose inter-arrival hazard at lag k is
    G(beta_k); the mean inter-arrival time is sum_{k>=0} P(T > k) =
    sum_{k>=0} exp(-sum_{l<=k} G(beta_l)) (the k=0 term is 1), and the rate
    is its reciprocal. The outer sum stops once the running term drops below
    `rel_stop` times the running total, then the truncation is certified by
    doubling the term count and checking the added mass is below 1e-9 of the
    total. Raises if 1e8 terms do not meet the certificate.
    """
    if schedule.horizon is not None:
        raise ValueError("the discovery rate needs an infinite-horizon schedule")

    def add_terms(count: int, k: int, hazard_sum: float,
                  total: float) -> tuple[int, float, float, float]:
        last = np.inf
        remaining = count
        while remaining > 0:
            m = min(_RATE_CHUNK, remaining)
            ell = np.arange(k + 1, k + m + 1)
            hazards = marginal_cdf(schedule.eval(ell), model)
            running = hazard_sum + np.cumsum(hazards)
            terms = np.exp(-running)
            total += float(np.sum(terms))
            hazard_sum = float(running[-1])
            last = float(terms[-1])
            k += m
            remaining -= m
        return k, hazard_sum, total, last

    k, hazard_sum, total = 0, 0.0, 1.0
    while True:
        k, hazard_sum, total, last = add_terms(_RATE_CHUNK, k, hazard_sum, total)
        if last < rel_stop * total:
            before = total
            k, hazard_sum, total, last = add_terms(k, k, hazard_sum, total)
            if total - before < _RATE_CERT_TOL * total:
                return 1.0 / total
        if k >= _RATE_CAP:
            raise RuntimeError(
                f"discovery-rate series did not converge within {_RATE_CAP} terms"
            )


@dataclasses.dataclass(frozen=True)
class RateBoundParams:
    """Inputs to the high-probability growth bound for the
    discovery-count-scaled rule.

    lam : constant in the alternative-CDF minorization F(x) >= lam * x^kappa.
    kappa : minorization exponent, in (0, 1).
    nu : spending-sequence power-law exponent, in (1, 1/kappa).
    c_tilde : scale constant of the bound (fit empirically; no closed form).
    delta : failure probability, in (0, 1).
    """

    lam: float
    kappa: float
    nu: float
    c_tilde: float
    delta: float

    def __post_init__(self):
        if not self.lam > 0.0:
            raise ValueError(f"lam must be positive, got {self.lam!r}")
        if not 0.0 < self.kappa < 1.0:
            raise ValueError(f"kappa must be in (0, 1), got {self.kappa!r}")
        if not 1.0 < self.nu < 1.0 / self.kappa:
            raise ValueError(
                f"nu must be in (1, 1/kappa) = (1, {1.0 / self.kappa!r}), "
                f"got {self.nu!r}"
            )
        if not self.c_tilde > 0.0:
            raise ValueError(f"c_tilde must be positive, got {self.c_tilde!r}")
        if not 0.0 < self.delta < 1.0:
            raise ValueError(f"delta must be in (0, 1), got {self.delta!r}")

    @property
    def exponent(self) -> float:
        """(1 - kappa nu) / (1 - kappa), in (0, 1) by the constraints."""
        return (1.0 - self.kappa * self.nu) / (1.0 - self.kappa)


def lond_rate_bound(params: RateBoundParams, n: int) -> float:
    """Discovery count that the discovery-count-scaled rule exceeds with
    probability at least 1 - delta: (delta n / c_tilde) ** exponent."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return float((params.delta * n / params.c_tilde) ** params.exponent)
