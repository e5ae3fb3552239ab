"""Synthetic data generation: mixture-model truths, Gaussian test statistics
(independent or sign-flipped equicorrelated), and ordering scenarios.

Randomness is counter-based and keyed: `stream_rng` derives an independent
generator from (master seed, n, pi, trial, purpose), so parallel trials are
reproducible regardless of scheduling.
"""
from __future__ import annotations

import dataclasses
import enum

import numpy as np

from .theory import normal_cdf

__all__ = [
    "TrialTruth",
    "PvalueStream",
    "DependenceKind",
    "DependenceSpec",
    "INDEPENDENT",
    "equicorrelated",
    "Scenario",
    "StreamPurpose",
    "stream_rng",
    "default_sigma2",
    "sample_truth",
    "sample_truth_fixed_effect",
    "sample_statistics",
    "apply_scenario",
    "implied_covariance",
]


@dataclasses.dataclass(frozen=True)
class TrialTruth:
    """Ground truth for one trial: mean shifts and the null mask."""

    thetas: np.ndarray
    is_null: np.ndarray

    def __post_init__(self):
        if self.thetas.shape != self.is_null.shape:
            raise ValueError("thetas and is_null must have matching shapes")
        if not np.array_equal(self.is_null, self.thetas == 0.0):
            raise ValueError("is_null must mark exactly the zero mean shifts")

    @property
    def n(self) -> int:
        return self.thetas.size


@dataclasses.dataclass(frozen=True)
class PvalueStream:
    """Test statistics and their two-sided p-values, in testing order.

    `order` is the permutation applied to the as-sampled arrays: entry k
    holds the original index now tested at position k.
    """

    pvalues: np.ndarray
    z: np.ndarray
    order: np.ndarray

    @property
    def n(self) -> int:
        return self.pvalues.size


class DependenceKind(enum.Enum):
    INDEPENDENT = "independent"
    EQUICORR_SIGNED = "equicorr_signed"


@dataclasses.dataclass(frozen=True)
class DependenceSpec:
    """Noise law for the test statistics.

    INDEPENDENT ignores rho. EQUICORR_SIGNED draws noise with covariance
    Lambda (rho * 11' + (1-rho) * I) Lambda, where Lambda is a diagonal of
    random signs redrawn every trial: unit variances, off-diagonal entries
    +-rho.
    """

    kind: DependenceKind
    rho: float = 0.0

    def __post_init__(self):
        if self.kind is DependenceKind.INDEPENDENT:
            if self.rho != 0.0:
                raise ValueError("independent noise has rho = 0")
        elif not 0.0 <= self.rho < 1.0:
            raise ValueError(f"rho must be in [0, 1), got {self.rho!r}")

    def describe(self) -> str:
        if self.kind is DependenceKind.INDEPENDENT:
            return "independent"
        return f"equicorr_signed(rho={self.rho!r})"

    @staticmethod
    def from_descriptor(text: str) -> "DependenceSpec":
        text = text.strip()
        if text == "independent":
            return INDEPENDENT
        prefix, suffix = "equicorr_signed(rho=", ")"
        if text.startswith(prefix) and text.endswith(suffix):
            return equicorrelated(float(text[len(prefix):-len(suffix)]))
        raise ValueError(f"unrecognized dependence descriptor: {text!r}")


INDEPENDENT = DependenceSpec(DependenceKind.INDEPENDENT, 0.0)


def equicorrelated(rho: float) -> DependenceSpec:
    return DependenceSpec(DependenceKind.EQUICORR_SIGNED, float(rho))


class Scenario(enum.Enum):
    """Hypothesis ordering: I = as sampled, II = largest |theta| first."""

    I = "I"
    II = "II"


class StreamPurpose(enum.IntEnum):
    """Namespaces one trial's generators so draws never alias."""

    TRUTH = 0
    NOISE = 1
    SIGNS = 2


def _pi_key(pi: float) -> int:
    return int(round(float(pi) * 10**9))


def stream_rng(master_seed: int, n: int, pi: float, trial: int,
               purpose: StreamPurpose) -> np.random.Generator:
    """Independent counter-based generator for one (trial, purpose) cell."""
    seq = np.random.SeedSequence(
        (int(master_seed), int(n), _pi_key(pi), int(trial), int(purpose))
    )
    return np.random.Generator(np.random.Philox(seq))


def _as_generator(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.Philox(seed))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))


def default_sigma2(n: int) -> float:
    """Signal variance scaling 2 log n, which keeps signals detectable."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return float(2.0 * np.log(n))


def sample_truth(n: int, pi: float, sigma2: float | None = None, seed=0) -> TrialTruth:
    """Each mean shift is 0 with probability 1-pi, else N(0, sigma2).

    sigma2 defaults to 2 log n.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0.0 <= pi <= 1.0:
        raise ValueError(f"pi must be in [0, 1], got {pi!r}")
    if sigma2 is None:
        sigma2 = default_sigma2(n)
    if not sigma2 > 0.0:
        raise ValueError(f"sigma2 must be positive, got {sigma2!r}")
    rng = _as_generator(seed)
    nonnull = rng.random(n) < pi
    draws = rng.standard_normal(n) * np.sqrt(sigma2)
    thetas = np.where(nonnull, draws, 0.0)
    return TrialTruth(thetas=thetas, is_null=~nonnull)


def sample_truth_fixed_effect(n: int, epsilon: float, mu: float, seed=0) -> TrialTruth:
    """Each mean shift is 0 with probability 1-epsilon, else exactly mu."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must be in [0, 1], got {epsilon!r}")
    if mu == 0.0:
        raise ValueError("mu must be nonzero, otherwise no signal exists")
    rng = _as_generator(seed)
    nonnull = rng.random(n) < epsilon
    thetas = np.where(nonnull, float(mu), 0.0)
    return TrialTruth(thetas=thetas, is_null=~nonnull)


def two_sided_pvalues(z: np.ndarray) -> np.ndarray:
    """p = 2 Phi(-|z|): two-sided tail probability of a unit normal."""
    return 2.0 * normal_cdf(-np.abs(z))


def sample_statistics(truth: TrialTruth, dep: DependenceSpec = INDEPENDENT,
                      seed=0, signs: np.ndarray | None = None) -> PvalueStream:
    """Draw z = theta + noise and the two-sided p-values, in sampled order.

    For EQUICORR_SIGNED noise the factorization
        noise = Lambda (sqrt(rho) u 1 + sqrt(1-rho) g)
    is used, with u a single shared standard normal, g a standard normal
    vector, and Lambda = diag(signs). When `signs` is None, signs are drawn
    from `seed`'s generator after u and g.
    """
    n = truth.n
    rng = _as_generator(seed)
    if dep.kind is DependenceKind.INDEPENDENT:
        noise = rng.standard_normal(n)
    else:
        u = rng.standard_normal()
        g = rng.standard_normal(n)
        if signs is None:
            signs = rng.integers(0, 2, n) * 2 - 1
        else:
            signs = np.asarray(signs)
            if signs.shape != (n,) or not np.all(np.abs(signs) == 1):
                raise ValueError("signs must be a length-n vector of +-1")
        noise = signs * (np.sqrt(dep.rho) * u + np.sqrt(1.0 - dep.rho) * g)
    z = truth.thetas + noise
    return PvalueStream(
        pvalues=two_sided_pvalues(z), z=z, order=np.arange(n, dtype=np.int64)
    )


def apply_scenario(stream: PvalueStream, truth: TrialTruth,
                   scenario: Scenario) -> tuple[PvalueStream, TrialTruth]:
    """Reorder a trial for testing.

    Scenario I keeps the sampled order. Scenario II moves the largest |theta|
    first (stable for ties), ordering by the means themselves rather than by
    the realized p-values.
    """
    if stream.n != truth.n:
        raise ValueError("stream and truth lengths differ")
    if scenario is Scenario.I:
        return stream, truth
    order = np.argsort(-np.abs(truth.thetas), kind="stable")
    new_stream = PvalueStream(
        pvalues=stream.pvalues[order],
        z=stream.z[order],
        order=stream.order[order],
    )
    new_truth = TrialTruth(
        thetas=truth.thetas[order], is_null=truth.is_null[order]
    )
    return new_stream, new_truth


def implied_covariance(dep: DependenceSpec, signs: np.ndarray) -> np.ndarray:
    """Covariance matrix the noise construction induces, for cross-checks."""
    signs = np.asarray(signs, dtype=np.float64)
    n = signs.size
    if dep.kind is DependenceKind.INDEPENDENT:
        return np.eye(n)
    outer = np.outer(signs, signs)
    return dep.rho * outer + (1.0 - dep.rho) * np.eye(n)
