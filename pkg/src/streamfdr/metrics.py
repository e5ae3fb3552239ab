"""Error and power estimators over Monte Carlo trials: false discovery
proportion/rate, the ratio-of-expectations variant, relative power against
the offline step-up baseline, and the per-cell report record."""
from __future__ import annotations

import dataclasses
import warnings

import numpy as np

__all__ = [
    "TrialOutcome",
    "outcome_from_masks",
    "fdp",
    "estimate_fdr",
    "estimate_mfdr",
    "mfdr_delta_se",
    "relative_power",
    "relative_power_stats",
    "fwer",
    "ExperimentReport",
    "REPORT_COLUMNS",
]


@dataclasses.dataclass(frozen=True)
class TrialOutcome:
    """Rejection accounting for one trial: D total, V false, U true."""

    D: int
    V: int
    U: int

    def __post_init__(self):
        if self.D < 0 or self.V < 0 or self.U < 0:
            raise ValueError("counts must be nonnegative")
        if self.D != self.V + self.U:
            raise ValueError(
                f"total rejections must split into false + true: "
                f"D={self.D}, V={self.V}, U={self.U}"
            )


def outcome_from_masks(rejected: np.ndarray, is_null: np.ndarray) -> TrialOutcome:
    """Tally one trial's decisions against the ground-truth null mask."""
    rejected = np.asarray(rejected, dtype=bool)
    is_null = np.asarray(is_null, dtype=bool)
    if rejected.shape != is_null.shape:
        raise ValueError("rejected and is_null must have matching shapes")
    v = int(np.count_nonzero(rejected & is_null))
    u = int(np.count_nonzero(rejected & ~is_null))
    return TrialOutcome(D=v + u, V=v, U=u)


def _arrays(outcomes) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    v = np.array([o.V for o in outcomes], dtype=np.float64)
    d = np.array([o.D for o in outcomes], dtype=np.float64)
    u = np.array([o.U for o in outcomes], dtype=np.float64)
    return v, d, u


def fdp(outcome: TrialOutcome) -> float:
    """False discovery proportion V / max(D, 1); 0 when nothing is rejected."""
    return outcome.V / max(outcome.D, 1)


def estimate_fdr(outcomes) -> tuple[float, float]:
    """Sample mean of the per-trial FDP and its standard error."""
    if len(outcomes) < 2:
        raise ValueError("estimating a rate needs at least 2 trials")
    v, d, _ = _arrays(outcomes)
    ratios = v / np.maximum(d, 1.0)
    mean = float(np.mean(ratios))
    se = float(np.std(ratios, ddof=1) / np.sqrt(ratios.size))
    return mean, se


def estimate_mfdr(outcomes, eta: float = 1.0) -> float:
    """Ratio of expectations mean(V) / (mean(D) + eta).

    With eta = 0 and no discoveries at all the ratio is undefined; returns 0
    by convention and warns.
    """
    if not eta >= 0.0:
        raise ValueError(f"eta must be >= 0, got {eta!r}")
    if len(outcomes) < 1:
        raise ValueError("estimating a rate needs at least 1 trial")
    v, d, _ = _arrays(outcomes)
    denom = float(np.mean(d)) + eta
    if denom == 0.0:
        warnings.warn(
            "no discoveries and eta = 0: ratio undefined, returning 0",
            RuntimeWarning,
            stacklevel=2,
        )
        return 0.0
    return float(np.mean(v)) / denom


def mfdr_delta_se(outcomes, eta: float = 1.0) -> float:
    """Delta-method standard error of mean(V) / (mean(D) + eta)."""
    if len(outcomes) < 2:
        return float("nan")
    v, d, _ = _arrays(outcomes)
    denom = float(np.mean(d)) + eta
    if denom == 0.0:
        return float("nan")
    ratio = float(np.mean(v)) / denom
    cov = np.cov(v, d, ddof=1)
    var = (cov[0, 0] - 2.0 * ratio * cov[0, 1] + ratio * ratio * cov[1, 1]) / (
        denom * denom * v.size
    )
    return float(np.sqrt(max(var, 0.0)))


def relative_power_stats(outcomes, bh_outcomes) -> tuple[float, float, int]:
    """Mean and SE of the per-trial ratio U / U_baseline, plus the number of
    trials skipped because the baseline made no true discoveries."""
    if len(outcomes) != len(bh_outcomes):
        raise ValueError("outcomes must be paired per trial")
    _, _, u = _arrays(outcomes)
    _, _, u_bh = _arrays(bh_outcomes)
    usable = u_bh > 0
    skipped = int(np.count_nonzero(~usable))
    if not usable.any():
        raise ValueError(
            "relative power undefined: the baseline made no true discoveries "
            "in any trial"
        )
    ratios = u[usable] / u_bh[usable]
    mean = float(np.mean(ratios))
    se = (
        float(np.std(ratios, ddof=1) / np.sqrt(ratios.size))
        if ratios.size >= 2
        else float("nan")
    )
    return mean, se, skipped


def relative_power(outcomes, bh_outcomes) -> float:
    """Mean over trials of U / U_baseline, skipping baseline-empty trials."""
    return relative_power_stats(outcomes, bh_outcomes)[0]


def fwer(outcomes) -> float:
    """Fraction of trials with at least one false rejection."""
    if len(outcomes) < 1:
        raise ValueError("estimating a rate needs at least 1 trial")
    v, _, _ = _arrays(outcomes)
    return float(np.mean(v >= 1.0))


# Fixed column order of the report CSV; the first 14 are the stable public
# schema, the rest are supplementary.
REPORT_COLUMNS = [
    "rule",
    "scenario",
    "dependence",
    "n",
    "pi",
    "trials",
    "fdr",
    "fdr_se",
    "mfdr",
    "eta",
    "power_rel_bh",
    "power_se",
    "mean_D",
    "mean_V",
    "mfdr_se",
    "fwer",
    "power_skipped",
]


@dataclasses.dataclass(frozen=True)
class ExperimentReport:
    """One report row: a (rule, scenario, dependence, n, pi) cell's
    estimates over `trials` Monte Carlo trials."""

    rule: str
    scenario: str
    dependence: str
    n: int
    pi: float
    trials: int
    fdr: float
    fdr_se: float
    mfdr: float
    eta: float
    power_rel_bh: float
    power_se: float
    mean_D: float
    mean_V: float
    mfdr_se: float
    fwer: float
    power_skipped: int

    def to_row(self) -> list:
        return [getattr(self, c) for c in REPORT_COLUMNS]

    @classmethod
    def from_outcomes(cls, rule: str, scenario: str, dependence: str, n: int,
                      pi: float, eta: float, outcomes, bh_outcomes) -> "ExperimentReport":
        v, d, _ = _arrays(outcomes)
        fdr_hat, fdr_se = estimate_fdr(outcomes)
        try:
            power, power_se, skipped = relative_power_stats(outcomes, bh_outcomes)
        except ValueError:
            power, power_se, skipped = float("nan"), float("nan"), len(outcomes)
        return cls(
            rule=rule,
            scenario=scenario,
            dependence=dependence,
            n=int(n),
            pi=float(pi),
            trials=len(outcomes),
            fdr=fdr_hat,
            fdr_se=fdr_se,
            mfdr=estimate_mfdr(outcomes, eta),
            eta=float(eta),
            power_rel_bh=power,
            power_se=power_se,
            mean_D=float(np.mean(d)),
            mean_V=float(np.mean(v)),
            mfdr_se=mfdr_delta_se(outcomes, eta),
            fwer=fwer(outcomes),
            power_skipped=skipped,
        )
