"""Command-line interface.

Subcommands: `simulate` (Monte Carlo sweep to a report CSV), `analyze`
(p-value CSV to a decision CSV), `ingest` (expression + label CSVs to a
p-value CSV), `bound` (closed-form theoretical quantities), and `replicate`
(named sweep presets).
"""
from __future__ import annotations

import argparse
import dataclasses
import sys

import numpy as np

from . import harness
from .metrics import fdp, outcome_from_masks
from .offline import bh_adjusted
from .rules import RuleKind
from .schedules import from_descriptor
from .simulate import DependenceSpec, INDEPENDENT, Scenario, equicorrelated
from .theory import (
    AlternativeModel,
    RateBoundParams,
    alt_cdf,
    lond_rate_bound,
    lord_rate,
)


def _write_text(path: str, text: str) -> None:
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "wb") as fh:
            fh.write(text.encode("utf-8"))


def _rule_kinds(text: str) -> tuple:
    return tuple(RuleKind(tok.strip()) for tok in text.split(",") if tok.strip())


def _floats(text: str) -> tuple:
    return tuple(float(tok) for tok in text.split(",") if tok.strip())


def _dependence(name: str | None, rho: float) -> DependenceSpec | None:
    if name is None:
        return None
    name = name.strip()
    if name == "independent":
        return INDEPENDENT
    if name == "equicorr_signed":
        return equicorrelated(rho)
    return DependenceSpec.from_descriptor(name)


def _add_simulate(sub) -> None:
    p = sub.add_parser(
        "simulate", help="run a Monte Carlo sweep and write the report CSV"
    )
    p.add_argument("--config", help="key=value config file; flags override it")
    p.add_argument("--rules", help="comma-separated rule kinds "
                   "(lond,lond_or1,lond_adjusted,lord,bonferroni,alpha_investing)")
    p.add_argument("--n", type=int, help="hypotheses per trial")
    p.add_argument("--pis", help="comma-separated signal fractions")
    p.add_argument("--trials", type=int, help="Monte Carlo trials per cell")
    p.add_argument("--alpha", type=float, help="target error level")
    p.add_argument("--scenario", choices=["I", "II"],
                   help="I: sampled order; II: largest |theta| first")
    p.add_argument("--dependence",
                   help="independent, equicorr_signed (uses --rho), or a full "
                        "descriptor like equicorr_signed(rho=0.5)")
    p.add_argument("--rho", type=float, default=0.5,
                   help="equicorrelation level (default 0.5)")
    p.add_argument("--schedule", help="spending schedule descriptor, e.g. "
                   "log_power(alpha=0.05,nu=2.0,horizon=inf)")
    p.add_argument("--master-seed", type=int, help="root seed for all trials")
    p.add_argument("--eta", type=float, help="denominator offset of the "
                   "ratio-of-expectations metric")
    p.add_argument("--workers", type=int, default=1, help="worker processes")
    p.add_argument("--out", default="-", help="output path (- for stdout)")
    p.set_defaults(func=_cmd_simulate)


def _cmd_simulate(args) -> int:
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            config = harness.parse_config_text(fh.read())
    else:
        config = harness.ExperimentConfig()
    overrides = {}
    if args.rules is not None:
        overrides["rules"] = _rule_kinds(args.rules)
    if args.n is not None:
        overrides["n"] = args.n
    if args.pis is not None:
        overrides["pis"] = _floats(args.pis)
    if args.trials is not None:
        overrides["trials"] = args.trials
    if args.alpha is not None:
        overrides["alpha"] = args.alpha
    if args.scenario is not None:
        overrides["scenario"] = Scenario(args.scenario)
    dep = _dependence(args.dependence, args.rho)
    if dep is not None:
        overrides["dependence"] = dep
    if args.schedule is not None:
        overrides["schedule"] = args.schedule
    if args.master_seed is not None:
        overrides["master_seed"] = args.master_seed
    if args.eta is not None:
        overrides["eta"] = args.eta
    if overrides:
        config = dataclasses.replace(config, **overrides)
    reports = harness.run_experiment(config, workers=args.workers)
    text = harness.report_csv_text(
        reports, harness.config_text(config), config.alpha
    )
    _write_text(args.out, text)
    return 0


def _add_analyze(sub) -> None:
    p = sub.add_parser(
        "analyze", help="run one online rule over a p-value CSV"
    )
    p.add_argument("--input", required=True, help="CSV with a `p` column "
                   "(optional `truth` column enables error metrics)")
    p.add_argument("--rule", required=True,
                   choices=[k.value for k in RuleKind])
    p.add_argument("--schedule",
                   default=harness.DEFAULT_SCHEDULE,
                   help="spending schedule descriptor")
    p.add_argument("--alpha", type=float, default=harness.DEFAULT_ALPHA,
                   help="error level (alpha_investing wealth and baseline level)")
    p.add_argument("--baseline", choices=["none", "bh_adjusted"],
                   default="none",
                   help="also run the rescaled offline baseline and report "
                        "the overlap fraction")
    p.add_argument("--out", default="-", help="decision CSV path (- for stdout)")
    p.set_defaults(func=_cmd_analyze)


def _cmd_analyze(args) -> int:
    pvalues, truth = harness.read_pvalue_csv(args.input)
    kind = RuleKind(args.rule)
    schedule = None
    if kind is not RuleKind.ALPHA_INVESTING:
        schedule = from_descriptor(args.schedule)
    decisions = harness.analyze_stream(pvalues, kind, schedule, args.alpha)
    _write_text(args.out, harness.decision_csv_text(decisions, kind, schedule))
    rejected = np.array([d.rejected for d in decisions], dtype=bool)
    print(f"tests: {len(decisions)}  rejections: {int(rejected.sum())}",
          file=sys.stderr)
    if truth is not None:
        outcome = outcome_from_masks(rejected, ~truth)
        print(
            f"true rejections: {outcome.U}  false rejections: {outcome.V}  "
            f"fdp: {fdp(outcome):.6f}",
            file=sys.stderr,
        )
    if args.baseline == "bh_adjusted":
        base = bh_adjusted(pvalues, args.alpha)
        frac = harness.overlap_fraction(rejected, base.rejected)
        print(
            f"baseline bh_adjusted rejections: {base.num_rejected}  "
            f"overlap fraction: {frac:.6f}",
            file=sys.stderr,
        )
    return 0


def _add_ingest(sub) -> None:
    p = sub.add_parser(
        "ingest",
        help="two-sample t-test: expression + label CSVs to a p-value CSV",
    )
    p.add_argument("--expression", required=True,
                   help="CSV: header gene,<subject>..., one row per gene")
    p.add_argument("--labels", required=True,
                   help="CSV with subject,label columns; label control|case")
    p.add_argument("--out", default="-", help="p-value CSV path (- for stdout)")
    p.set_defaults(func=_cmd_ingest)


def _cmd_ingest(args) -> int:
    genes, subjects, matrix = harness.read_expression_csv(args.expression)
    label_map = harness.read_labels_csv(args.labels)
    dataset = harness.build_two_sample_dataset(subjects, matrix, label_map)
    pvalues = harness.two_sample_pvalues(dataset)
    _write_text(args.out, harness.pvalue_csv_text(pvalues))
    print(f"genes: {len(genes)}  controls: {dataset.m1}  cases: {dataset.m2}",
          file=sys.stderr)
    return 0


def _add_bound(sub) -> None:
    p = sub.add_parser("bound", help="closed-form theoretical quantities")
    inner = p.add_subparsers(dest="bound_kind", required=True)

    rate = inner.add_parser(
        "rate", help="long-run discovery rate of the schedule-restarting rule"
    )
    rate.add_argument("--schedule", default=harness.DEFAULT_SCHEDULE)
    rate.add_argument("--mu", type=float, required=True)
    rate.add_argument("--epsilon", type=float, required=True)
    rate.set_defaults(func=_cmd_bound_rate)

    growth = inner.add_parser(
        "growth",
        help="high-probability discovery-count lower bound for the "
             "discovery-count-scaled rule",
    )
    growth.add_argument("--lam", type=float, required=True)
    growth.add_argument("--kappa", type=float, required=True)
    growth.add_argument("--nu", type=float, required=True)
    growth.add_argument("--c-tilde", type=float, required=True)
    growth.add_argument("--delta", type=float, required=True)
    growth.add_argument("--n", type=int, required=True)
    growth.set_defaults(func=_cmd_bound_growth)

    acdf = inner.add_parser(
        "alt-cdf", help="non-null p-value CDF of the Gaussian mixture"
    )
    acdf.add_argument("--nu", type=float, required=True)
    acdf.add_argument("--mu", type=float, required=True)
    acdf.add_argument("--epsilon", type=float, default=1.0)
    acdf.set_defaults(func=_cmd_bound_alt_cdf)


def _cmd_bound_rate(args) -> int:
    schedule = from_descriptor(args.schedule)
    model = AlternativeModel(mu=args.mu, epsilon=args.epsilon)
    print(repr(lord_rate(schedule, model)))
    return 0


def _cmd_bound_growth(args) -> int:
    params = RateBoundParams(
        lam=args.lam, kappa=args.kappa, nu=args.nu,
        c_tilde=args.c_tilde, delta=args.delta,
    )
    print(repr(lond_rate_bound(params, args.n)))
    return 0


def _cmd_bound_alt_cdf(args) -> int:
    model = AlternativeModel(mu=args.mu, epsilon=args.epsilon)
    print(repr(alt_cdf(args.nu, model)))
    return 0


def _add_replicate(sub) -> None:
    p = sub.add_parser("replicate", help="run a named sweep preset")
    p.add_argument("--preset", required=True, choices=list(harness.PRESET_NAMES))
    p.add_argument("--trials", type=int, help="override the preset trial count")
    p.add_argument("--full-trials", action="store_true",
                   help="use 10000 trials per cell")
    p.add_argument("--master-seed", type=int, help="override the preset seed")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="-", help="report CSV path (- for stdout)")
    p.set_defaults(func=_cmd_replicate)


def _cmd_replicate(args) -> int:
    if args.full_trials and args.trials is not None:
        raise ValueError("--full-trials and --trials are mutually exclusive")
    trials = 10000 if args.full_trials else args.trials
    text = harness.run_preset(
        args.preset,
        workers=args.workers,
        trials=trials,
        master_seed=args.master_seed,
    )
    _write_text(args.out, text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="streamfdr",
        description="Online false discovery rate control over p-value "
                    "streams: simulation sweeps, stream analysis, and "
                    "theoretical bounds.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    _add_simulate(sub)
    _add_analyze(sub)
    _add_ingest(sub)
    _add_bound(sub)
    _add_replicate(sub)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
