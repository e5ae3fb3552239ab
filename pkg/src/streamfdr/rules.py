"""Online multiple-testing rules over p-value streams.

Each rule maps the history of decisions to a significance threshold for the
next test; the decision is reject iff p <= threshold (ties reject). `step`
advances one test at a time; `run_stream` processes a whole stream and is
bit-identical to folding `step`, which a test asserts.
"""
from __future__ import annotations

import dataclasses
import enum

import numpy as np

from .numerics import harmonic_numbers
from .schedules import BetaSchedule

__all__ = [
    "RuleKind",
    "Rule",
    "RuleState",
    "Decision",
    "DecisionLog",
    "ALPHA_CAP",
    "initial_state",
    "lond_alpha",
    "lond_or1_alpha",
    "lord_alpha",
    "alpha_investing_alpha",
    "alpha_investing_update",
    "step",
    "run_stream",
]

# Thresholds are capped strictly below 1 so the wealth update 1/(1 - alpha)
# stays finite.
ALPHA_CAP = 1.0 - 2.0**-32


class RuleKind(enum.Enum):
    LOND = "lond"                      # threshold beta_i * (discoveries + 1)
    LOND_OR1 = "lond_or1"              # threshold beta_i * max(discoveries, 1)
    LOND_ADJUSTED = "lond_adjusted"    # LOND on beta_i / H_i (harmonic rescale)
    LORD = "lord"                      # threshold beta_{i - last_discovery}
    BONFERRONI = "bonferroni"          # threshold beta_i
    ALPHA_INVESTING = "alpha_investing"  # wealth-based threshold


@dataclasses.dataclass(frozen=True)
class RuleState:
    """Progress of a rule along a stream.

    index : number of tests already decided.
    discoveries : number of rejections so far.
    last_discovery : 1-based index of the most recent rejection, 0 if none.
    wealth : remaining budget (alpha-investing only; 0.0 otherwise).
    halted : latched once wealth goes negative; thresholds are 0 from then on.
    clamp_count : number of times the threshold hit ALPHA_CAP.
    """

    index: int = 0
    discoveries: int = 0
    last_discovery: int = 0
    wealth: float = 0.0
    halted: bool = False
    clamp_count: int = 0


@dataclasses.dataclass(frozen=True)
class Decision:
    index: int
    pvalue: float
    alpha_used: float
    rejected: bool


@dataclasses.dataclass(frozen=True)
class Rule:
    """A rule kind plus the inputs it needs.

    `schedule` is required for every kind except ALPHA_INVESTING, which
    instead needs `alpha` (initial wealth) and optionally `omega` (reward per
    rejection, defaulting to `alpha`).
    """

    kind: RuleKind
    schedule: BetaSchedule | None = None
    alpha: float | None = None
    omega: float | None = None

    def __post_init__(self):
        if self.kind is RuleKind.ALPHA_INVESTING:
            if self.alpha is None:
                raise ValueError("alpha_investing requires alpha (initial wealth)")
            if not 0.0 < self.alpha < 1.0:
                raise ValueError(f"alpha must be in (0, 1), got {self.alpha!r}")
            if self.omega is not None and not self.omega >= 0.0:
                raise ValueError(f"omega must be >= 0, got {self.omega!r}")
        elif self.schedule is None:
            raise ValueError(f"{self.kind.value} requires a spending schedule")

    @property
    def reward(self) -> float:
        return self.alpha if self.omega is None else self.omega


def initial_state(rule: Rule) -> RuleState:
    wealth = rule.alpha if rule.kind is RuleKind.ALPHA_INVESTING else 0.0
    return RuleState(wealth=wealth)


def lond_alpha(state: RuleState, schedule: BetaSchedule, adjusted: bool = False) -> float:
    """Threshold for the next test: beta_i * (D + 1), with i = index + 1.

    With `adjusted`, beta_i is first divided by the i-th harmonic number,
    which restores the budget guarantee under arbitrary dependence.
    """
    i = state.index + 1
    beta = schedule.eval(i)
    if adjusted:
        beta = beta / float(harmonic_numbers(i)[-1])
    return beta * (state.discoveries + 1)


def lond_or1_alpha(state: RuleState, schedule: BetaSchedule) -> float:
    """Threshold beta_i * max(D, 1): like LOND but never below beta_i."""
    return schedule.eval(state.index + 1) * max(state.discoveries, 1)


def lord_alpha(state: RuleState, schedule: BetaSchedule) -> float:
    """Threshold beta_{i - tau}: the schedule restarts after each discovery."""
    i = state.index + 1
    return schedule.eval(i - state.last_discovery)


def _investing_alpha(state: RuleState) -> tuple[float, bool]:
    if state.halted:
        return 0.0, False
    raw = state.wealth / (state.index + 2 - state.last_discovery)
    if raw > ALPHA_CAP:
        return ALPHA_CAP, True
    if raw < 0.0:
        return 0.0, False
    return raw, False


def alpha_investing_alpha(state: RuleState) -> float:
    """Threshold wealth / (1 + j - tau) for the next test j, capped below 1."""
    return _investing_alpha(state)[0]


def alpha_investing_update(state: RuleState, decision: Decision, omega: float) -> RuleState:
    """Advance an alpha-investing state by one decided test.

    Rejection earns `omega`; acceptance spends alpha / (1 - alpha). Once
    wealth goes negative the rule halts for good: wealth freezes and every
    later threshold is 0.
    """
    if state.halted:
        wealth = state.wealth
    elif decision.rejected:
        wealth = state.wealth + omega
    else:
        alpha = decision.alpha_used
        if alpha == 1.0:
            raise ValueError("threshold of exactly 1 would spend infinite wealth")
        wealth = state.wealth - alpha / (1.0 - alpha)
    return RuleState(
        index=state.index + 1,
        discoveries=state.discoveries + bool(decision.rejected),
        last_discovery=state.index + 1 if decision.rejected else state.last_discovery,
        wealth=wealth,
        halted=state.halted or wealth < 0.0,
        clamp_count=state.clamp_count,
    )


def _advance(state: RuleState, decision: Decision) -> RuleState:
    return RuleState(
        index=state.index + 1,
        discoveries=state.discoveries + bool(decision.rejected),
        last_discovery=state.index + 1 if decision.rejected else state.last_discovery,
        wealth=state.wealth,
        halted=state.halted,
        clamp_count=state.clamp_count,
    )


def _validate_pvalue(p: float) -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p-value must be in [0, 1], got {p!r}")
    return p


def step(rule: Rule, state: RuleState, p: float) -> tuple[Decision, RuleState]:
    """Decide one test: returns the decision and the advanced state."""
    p = _validate_pvalue(p)
    kind = rule.kind
    clamped = False
    if kind is RuleKind.LOND:
        alpha = lond_alpha(state, rule.schedule)
    elif kind is RuleKind.LOND_ADJUSTED:
        alpha = lond_alpha(state, rule.schedule, adjusted=True)
    elif kind is RuleKind.LOND_OR1:
        alpha = lond_or1_alpha(state, rule.schedule)
    elif kind is RuleKind.LORD:
        alpha = lord_alpha(state, rule.schedule)
    elif kind is RuleKind.BONFERRONI:
        alpha = rule.schedule.eval(state.index + 1)
    elif kind is RuleKind.ALPHA_INVESTING:
        alpha, clamped = _investing_alpha(state)
    else:
        raise AssertionError(kind)
    decision = Decision(
        index=state.index + 1, pvalue=p, alpha_used=alpha, rejected=p <= alpha
    )
    if kind is RuleKind.ALPHA_INVESTING:
        new_state = alpha_investing_update(state, decision, rule.reward)
    else:
        new_state = _advance(state, decision)
    if clamped:
        new_state = dataclasses.replace(new_state, clamp_count=new_state.clamp_count + 1)
    return decision, new_state


@dataclasses.dataclass(frozen=True)
class DecisionLog:
    """Decisions for one whole stream, in test order."""

    pvalues: np.ndarray
    alphas: np.ndarray
    rejected: np.ndarray
    final_state: RuleState

    def __len__(self) -> int:
        return self.pvalues.size

    @property
    def num_rejected(self) -> int:
        return int(np.count_nonzero(self.rejected))

    def discoveries_prefix(self) -> np.ndarray:
        """D(1..n): running count of rejections."""
        return np.cumsum(self.rejected.astype(np.int64))

    def decisions(self) -> list[Decision]:
        return [
            Decision(i + 1, float(self.pvalues[i]), float(self.alphas[i]),
                     bool(self.rejected[i]))
            for i in range(len(self))
        ]


def _validate_stream(pvalues) -> np.ndarray:
    p = np.asarray(pvalues, dtype=np.float64)
    if p.ndim != 1:
        raise ValueError(f"p-value stream must be 1-d, got shape {p.shape}")
    if p.size and (not np.all(np.isfinite(p)) or p.min() < 0.0 or p.max() > 1.0):
        raise ValueError("p-values must all lie in [0, 1]")
    return p


# Stream runners scan forward in fixed-size blocks so the work between two
# rejections is proportional to the gap, not to the remaining stream.
_SCAN_BLOCK = 512


def _run_counting(kind: RuleKind, beta: np.ndarray, p: np.ndarray,
                  alphas: np.ndarray, rejected: np.ndarray) -> None:
    """LOND variants: scan for the next rejection at the current multiplier."""
    n = p.size
    start = 0
    discoveries = 0
    while start < n:
        if kind is RuleKind.LOND_OR1:
            mult = max(discoveries, 1)
        else:
            mult = discoveries + 1
        pos = start
        hit = -1
        while pos < n:
            end = min(pos + _SCAN_BLOCK, n)
            thresh = beta[pos:end] * mult
            hits = p[pos:end] <= thresh
            alphas[pos:end] = thresh
            if hits.any():
                hit = pos + int(np.argmax(hits))
                break
            pos = end
        if hit < 0:
            return
        rejected[hit] = True
        discoveries += 1
        start = hit + 1


def _run_renewal(beta: np.ndarray, p: np.ndarray,
                 alphas: np.ndarray, rejected: np.ndarray) -> None:
    """LORD: the schedule index restarts after each rejection."""
    n = p.size
    start = 0
    tau = 0
    while start < n:
        pos = start
        hit = -1
        while pos < n:
            end = min(pos + _SCAN_BLOCK, n)
            thresh = beta[pos - tau:end - tau]
            hits = p[pos:end] <= thresh
            alphas[pos:end] = thresh
            if hits.any():
                hit = pos + int(np.argmax(hits))
                break
            pos = end
        if hit < 0:
            return
        rejected[hit] = True
        tau = hit + 1
        start = tau


def _run_investing(rule: Rule, p: np.ndarray,
                   alphas: np.ndarray, rejected: np.ndarray) -> RuleState:
    n = p.size
    wealth = float(rule.alpha)
    omega = float(rule.reward)
    tau = 0
    discoveries = 0
    halted = False
    clamp_count = 0
    for i in range(n):
        if halted:
            alpha = 0.0
        else:
            alpha = wealth / (i + 2 - tau)
            if alpha > ALPHA_CAP:
                alpha = ALPHA_CAP
                clamp_count += 1
            elif alpha < 0.0:
                alpha = 0.0
        rej = p[i] <= alpha
        if rej:
            if not halted:
                wealth = wealth + omega
            discoveries += 1
            tau = i + 1
        elif not halted:
            wealth = wealth - alpha / (1.0 - alpha)
        if wealth < 0.0:
            halted = True
        alphas[i] = alpha
        rejected[i] = rej
    return RuleState(
        index=n,
        discoveries=discoveries,
        last_discovery=tau,
        wealth=wealth,
        halted=halted,
        clamp_count=clamp_count,
    )


def run_stream(rule: Rule, pvalues) -> DecisionLog:
    """Run a rule down a finite stream of p-values.

    Equivalent to folding `step` over the stream, but vectorized where the
    rule allows it.
    """
    p = _validate_stream(pvalues)
    n = p.size
    alphas = np.empty(n)
    rejected = np.zeros(n, dtype=bool)
    if rule.kind is RuleKind.ALPHA_INVESTING:
        final = _run_investing(rule, p, alphas, rejected)
        return DecisionLog(p, alphas, rejected, final)
    beta = rule.schedule.eval(np.arange(1, n + 1)) if n else np.zeros(0)
    if rule.kind is RuleKind.LOND_ADJUSTED:
        beta = beta / harmonic_numbers(n)
    if rule.kind is RuleKind.BONFERRONI:
        alphas[:] = beta
        rejected[:] = p <= beta
    elif rule.kind is RuleKind.LORD:
        _run_renewal(beta, p, alphas, rejected)
    else:
        _run_counting(rule.kind, beta, p, alphas, rejected)
    hit_indices = np.flatnonzero(rejected)
    final = RuleState(
        index=n,
        discoveries=int(hit_indices.size),
        last_discovery=int(hit_indices[-1]) + 1 if hit_indices.size else 0,
        wealth=0.0,
        halted=False,
        clamp_count=0,
    )
    return DecisionLog(p, alphas, rejected, final)
