import dataclasses

import numpy as np
import pytest

from streamfdr.numerics import harmonic_numbers
from streamfdr.rules import (
    ALPHA_CAP,
    Decision,
    Rule,
    RuleKind,
    RuleState,
    alpha_investing_alpha,
    alpha_investing_update,
    initial_state,
    lond_alpha,
    lond_or1_alpha,
    lord_alpha,
    run_stream,
    step,
)
from streamfdr.schedules import make_log_power, make_power_law

ALL_KINDS = list(RuleKind)


class TableSchedule:
    """Schedule stub with hand-picked beta values, for exact threshold checks."""

    horizon = None

    def __init__(self, table):
        self.table = {int(k): float(v) for k, v in table.items()}

    def eval(self, ell):
        if np.ndim(ell) == 0:
            return self.table[int(ell)]
        return np.array([self.table[int(k)] for k in np.ravel(ell)])


def make_rule(kind, schedule, alpha=0.05):
    if kind is RuleKind.ALPHA_INVESTING:
        return Rule(kind, alpha=alpha)
    return Rule(kind, schedule=schedule)


def mixed_stream(rng, n):
    """Uniform p-values with a sprinkle of small ones to force rejections."""
    p = rng.random(n)
    small = rng.random(n) < 0.15
    p[small] *= 0.02
    return p


class TestThresholdFormulas:
    def test_count_scaled(self):
        sched = TableSchedule({1: 0.01, 4: 0.002, 9: 0.001})
        assert lond_alpha(RuleState(index=0, discoveries=0), sched) == 0.01
        assert lond_alpha(RuleState(index=3, discoveries=3), sched) == 0.002 * 4
        assert lond_alpha(RuleState(index=8, discoveries=1), sched) == 0.001 * 2

    def test_count_scaled_or1(self):
        sched = TableSchedule({1: 0.01, 4: 0.002, 9: 0.001})
        assert lond_or1_alpha(RuleState(index=0, discoveries=0), sched) == 0.01
        assert lond_or1_alpha(RuleState(index=3, discoveries=3), sched) == 0.006
        assert lond_or1_alpha(RuleState(index=8, discoveries=1), sched) == 0.001

    def test_harmonic_rescaled(self):
        sched = TableSchedule({3: 0.011})
        state = RuleState(index=2, discoveries=0)
        got = lond_alpha(state, sched, adjusted=True)
        assert got == pytest.approx(0.006, rel=1e-12)

    def test_rescaled_divides_before_scaling(self):
        # The base level is beta/H_i; the discovery multiplier applies after.
        sched = TableSchedule({3: 0.011})
        state = RuleState(index=2, discoveries=4)
        expected = (0.011 / float(harmonic_numbers(3)[-1])) * 5
        assert lond_alpha(state, sched, adjusted=True) == expected

    def test_schedule_restart(self):
        sched = TableSchedule({1: 0.5, 2: 0.25, 3: 0.125})
        assert lord_alpha(RuleState(index=2, last_discovery=0), sched) == 0.125
        assert lord_alpha(RuleState(index=6, last_discovery=5), sched) == 0.25
        assert lord_alpha(RuleState(index=5, last_discovery=5), sched) == 0.5

    def test_count_scaled_monotone_in_discoveries(self):
        sched = TableSchedule({5: 0.003})
        levels = [
            lond_alpha(RuleState(index=4, discoveries=d), sched)
            for d in range(6)
        ]
        assert np.all(np.diff(levels) > 0)

    def test_rescaled_dominated_by_plain(self):
        sched = make_log_power(0.05, 2.0)
        idx = np.arange(1, 2001)
        plain = sched.eval(idx)
        rescaled = plain / harmonic_numbers(2000)
        assert rescaled[0] == plain[0]
        assert np.all(rescaled[1:] < plain[1:])


class TestInvesting:
    def test_initial_threshold(self):
        state = RuleState(index=0, wealth=0.05)
        assert alpha_investing_alpha(state) == 0.025

    def test_threshold_right_after_discovery(self):
        state = RuleState(index=2, last_discovery=3, wealth=0.05)
        assert alpha_investing_alpha(state) == 0.05

    def test_halted_threshold_zero(self):
        state = RuleState(index=5, wealth=-0.2, halted=True)
        assert alpha_investing_alpha(state) == 0.0

    def test_accept_spends(self):
        state = RuleState(index=0, wealth=0.05)
        decision = Decision(index=1, pvalue=0.5, alpha_used=0.01, rejected=False)
        new = alpha_investing_update(state, decision, omega=0.05)
        assert new.wealth == 0.05 - 0.01 / 0.99
        assert new.wealth == pytest.approx(0.0398989898989899, rel=1e-12)
        assert not new.halted

    def test_reject_earns(self):
        state = RuleState(index=0, wealth=0.02)
        decision = Decision(index=1, pvalue=0.001, alpha_used=0.01, rejected=True)
        new = alpha_investing_update(state, decision, omega=0.05)
        assert new.wealth == 0.02 + 0.05
        assert new.discoveries == 1
        assert new.last_discovery == 1

    def test_overspend_halts(self):
        state = RuleState(index=0, wealth=0.001)
        decision = Decision(index=1, pvalue=0.5, alpha_used=0.01, rejected=False)
        new = alpha_investing_update(state, decision, omega=0.05)
        assert new.wealth == pytest.approx(-0.009101010101010103, rel=1e-12)
        assert new.halted

    def test_halt_is_permanent_and_wealth_frozen(self):
        state = RuleState(index=3, wealth=-0.009, halted=True)
        decision = Decision(index=4, pvalue=0.7, alpha_used=0.0, rejected=False)
        new = alpha_investing_update(state, decision, omega=0.05)
        assert new.halted
        assert new.wealth == -0.009

    def test_zero_pvalue_still_rejects_after_halt(self):
        # Two early discoveries push wealth above 2, the next threshold
        # clamps, and accepting at the clamped level overspends by ~2^32,
        # halting the rule. A later zero p-value still meets the zero
        # threshold, so the discovery is recorded, but the frozen wealth
        # earns nothing.
        rule = Rule(RuleKind.ALPHA_INVESTING, alpha=0.9, omega=0.9)
        log = run_stream(rule, [0.0, 0.0, 1.0, 0.0, 0.5])
        assert np.array_equal(log.rejected, [True, True, False, True, False])
        assert log.alphas[0] == 0.45
        assert log.alphas[1] == 0.9
        assert log.alphas[2] == ALPHA_CAP
        assert log.alphas[3] == 0.0 and log.alphas[4] == 0.0
        state = log.final_state
        assert state.halted
        assert state.clamp_count == 1
        assert state.discoveries == 3
        assert state.last_discovery == 4
        assert state.wealth < 0.0
        expected_wealth = ((0.9 + 0.9) + 0.9) - ALPHA_CAP / (1.0 - ALPHA_CAP)
        assert state.wealth == expected_wealth

    def test_threshold_of_one_rejected(self):
        state = RuleState(index=0, wealth=0.5)
        decision = Decision(index=1, pvalue=0.5, alpha_used=1.0, rejected=False)
        with pytest.raises(ValueError):
            alpha_investing_update(state, decision, omega=0.05)

    def test_clamp_counter(self):
        rule = Rule(RuleKind.ALPHA_INVESTING, alpha=0.9, omega=0.9)
        log = run_stream(rule, np.zeros(10))
        assert log.num_rejected == 10
        assert np.all(log.alphas <= ALPHA_CAP)
        assert log.final_state.clamp_count > 0

    def test_threshold_decay_starves_discoveries(self):
        # Spending without rewards cannot drive wealth negative: the rule
        # risks at most half its wealth per test, so wealth shrinks
        # geometrically and the thresholds decay below any fixed p-value.
        # Even a run of small p-values then goes unrewarded.
        rule = Rule(RuleKind.ALPHA_INVESTING, alpha=0.05)
        p = np.concatenate([np.full(400, 0.9), np.full(50, 1e-6)])
        log = run_stream(rule, p)
        assert not log.final_state.halted
        assert log.final_state.wealth > 0.0
        assert log.num_rejected == 0
        assert np.all(log.alphas > 0.0)
        assert np.all(np.diff(log.alphas) < 0.0)
        assert np.all(log.alphas[-50:] < 1e-6)


class TestStep:
    def test_reject_updates_counts(self):
        rule = make_rule(RuleKind.LOND, TableSchedule({1: 0.01}))
        decision, state = step(rule, initial_state(rule), 0.005)
        assert decision.rejected
        assert decision.alpha_used == 0.01
        assert state.discoveries == 1
        assert state.last_discovery == 1

    def test_restart_rule_renews_to_first_level(self):
        sched = TableSchedule({1: 0.02, 2: 0.01})
        rule = make_rule(RuleKind.LORD, sched)
        state = initial_state(rule)
        d1, state = step(rule, state, 0.015)
        d2, state = step(rule, state, 0.015)
        assert d1.rejected and d1.alpha_used == 0.02
        assert d2.rejected and d2.alpha_used == 0.02

    def test_tie_rejects(self):
        sched = make_log_power(0.05, 2.0)
        rule = make_rule(RuleKind.BONFERRONI, sched)
        decision, _ = step(rule, initial_state(rule), sched.eval(1))
        assert decision.pvalue == decision.alpha_used
        assert decision.rejected

    def test_pvalue_domain(self):
        rule = make_rule(RuleKind.LOND, TableSchedule({1: 0.01}))
        for bad in (-0.1, 1.5, float("nan")):
            with pytest.raises(ValueError):
                step(rule, initial_state(rule), bad)


class TestRunStream:
    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_matches_stepwise_fold(self, kind):
        sched = make_log_power(0.05, 2.0)
        rng = np.random.default_rng(20240811)
        for trial in range(8):
            p = mixed_stream(rng, int(rng.integers(1, 400)))
            rule = make_rule(kind, sched)
            log = run_stream(rule, p)
            state = initial_state(rule)
            for i in range(p.size):
                decision, state = step(rule, state, p[i])
                assert decision.alpha_used == log.alphas[i]
                assert decision.rejected == bool(log.rejected[i])
            assert state == log.final_state

    @pytest.mark.parametrize("kind", ALL_KINDS)
    def test_prefix_decisions_stable(self, kind):
        # Decisions at index <= k never depend on later p-values.
        sched = make_log_power(0.05, 2.0)
        rng = np.random.default_rng(7)
        p = mixed_stream(rng, 300)
        rule = make_rule(kind, sched)
        full = run_stream(rule, p)
        for k in (1, 10, 137, 299):
            part = run_stream(rule, p[:k])
            assert np.array_equal(part.rejected, full.rejected[:k])
            assert np.array_equal(part.alphas, full.alphas[:k])

    def test_empty_stream(self):
        rule = make_rule(RuleKind.LOND, make_power_law(0.05, 2.0))
        log = run_stream(rule, [])
        assert len(log) == 0
        assert log.num_rejected == 0
        assert log.final_state.index == 0

    def test_plain_threshold_rule_uses_raw_schedule(self):
        sched = make_power_law(0.05, 2.0)
        rule = make_rule(RuleKind.BONFERRONI, sched)
        p = np.full(50, 0.9)
        log = run_stream(rule, p)
        assert np.array_equal(log.alphas, sched.eval(np.arange(1, 51)))

    def test_count_scaled_multiplier_tracks_discoveries(self):
        sched = make_power_law(0.05, 2.0)
        rule = make_rule(RuleKind.LOND, sched)
        rng = np.random.default_rng(99)
        p = mixed_stream(rng, 500)
        log = run_stream(rule, p)
        beta = sched.eval(np.arange(1, 501))
        d_prev = np.concatenate([[0], np.cumsum(log.rejected)[:-1]])
        assert np.array_equal(log.alphas, beta * (d_prev + 1))

    def test_or1_multiplier_floors_at_one(self):
        sched = make_power_law(0.05, 2.0)
        rule = make_rule(RuleKind.LOND_OR1, sched)
        rng = np.random.default_rng(100)
        p = mixed_stream(rng, 500)
        log = run_stream(rule, p)
        beta = sched.eval(np.arange(1, 501))
        d_prev = np.concatenate([[0], np.cumsum(log.rejected)[:-1]])
        assert np.array_equal(log.alphas, beta * np.maximum(d_prev, 1))

    def test_restart_segments_replay_schedule_prefix(self):
        sched = make_log_power(0.05, 2.0)
        rule = make_rule(RuleKind.LORD, sched)
        rng = np.random.default_rng(4)
        # Strong signals every ~12 steps, small enough to clear the renewed
        # thresholds, so the log splits into many restart segments.
        p = rng.random(600)
        strong = rng.random(600) < 0.08
        p[strong] = rng.random(600)[strong] * 1e-5
        log = run_stream(rule, p)
        hits = np.flatnonzero(log.rejected)
        assert hits.size >= 3
        bounds = np.concatenate([[0], hits + 1, [p.size]])
        for lo, hi in zip(bounds[:-1], bounds[1:]):
            if hi > lo:
                gap = hi - lo
                assert np.array_equal(
                    log.alphas[lo:hi], sched.eval(np.arange(1, gap + 1))
                )

    def test_restart_budget_per_segment(self):
        # Between consecutive discoveries the spent thresholds are a prefix of
        # the schedule, so each segment spends at most the whole budget.
        sched = make_log_power(0.05, 2.0)
        rule = make_rule(RuleKind.LORD, sched)
        rng = np.random.default_rng(11)
        for _ in range(50):
            p = mixed_stream(rng, int(rng.integers(5, 300)))
            log = run_stream(rule, p)
            starts = np.concatenate([[0], np.flatnonzero(log.rejected) + 1])
            starts = starts[starts < p.size]
            sums = np.add.reduceat(log.alphas, starts)
            assert np.all(sums <= 0.05)

    def test_stream_validation(self):
        rule = make_rule(RuleKind.LOND, make_power_law(0.05, 2.0))
        with pytest.raises(ValueError):
            run_stream(rule, [[0.1, 0.2]])
        with pytest.raises(ValueError):
            run_stream(rule, [0.1, 1.2])
        with pytest.raises(ValueError):
            run_stream(rule, [0.1, float("nan")])

    def test_log_round_trip(self):
        rule = make_rule(RuleKind.LORD, make_log_power(0.05, 2.0))
        p = np.array([0.001, 0.5, 0.02, 0.9])
        log = run_stream(rule, p)
        decisions = log.decisions()
        assert [d.index for d in decisions] == [1, 2, 3, 4]
        assert [d.rejected for d in decisions] == list(log.rejected)
        assert np.array_equal(
            log.discoveries_prefix(), np.cumsum(log.rejected)
        )


class TestRuleConstruction:
    def test_schedule_required(self):
        with pytest.raises(ValueError):
            Rule(RuleKind.LOND)

    def test_investing_requires_wealth(self):
        with pytest.raises(ValueError):
            Rule(RuleKind.ALPHA_INVESTING)
        with pytest.raises(ValueError):
            Rule(RuleKind.ALPHA_INVESTING, alpha=1.5)
        with pytest.raises(ValueError):
            Rule(RuleKind.ALPHA_INVESTING, alpha=0.05, omega=-0.1)

    def test_reward_defaults_to_alpha(self):
        assert Rule(RuleKind.ALPHA_INVESTING, alpha=0.05).reward == 0.05
        assert Rule(RuleKind.ALPHA_INVESTING, alpha=0.05, omega=0.02).reward == 0.02

    def test_initial_state(self):
        investing = Rule(RuleKind.ALPHA_INVESTING, alpha=0.05)
        assert initial_state(investing).wealth == 0.05
        scheduled = make_rule(RuleKind.LOND, make_power_law(0.05, 2.0))
        state = initial_state(scheduled)
        assert state == RuleState()

    def test_states_are_immutable(self):
        state = RuleState()
        with pytest.raises(dataclasses.FrozenInstanceError):
            state.index = 3
