"""Experiment orchestration: Monte Carlo sweeps over the mixture model,
stream analysis, two-sample ingestion, report CSV serialization, and named
presets.

Reports are deterministic functions of the config: every trial draws its
randomness from generators keyed by (master_seed, n, pi, trial, purpose), and
per-trial results are merged in trial order, so worker count never changes
the output bytes.
"""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import math
import multiprocessing
import sys

import numpy as np

from .metrics import REPORT_COLUMNS, ExperimentReport, TrialOutcome
from .numerics import harmonic_numbers
from .offline import bh, bh_adjusted
from .rules import Decision, Rule, RuleKind, run_stream
from .simulate import (
    INDEPENDENT,
    DependenceKind,
    DependenceSpec,
    Scenario,
    StreamPurpose,
    apply_scenario,
    equicorrelated,
    sample_statistics,
    sample_truth,
    stream_rng,
)
from .schedules import BetaSchedule, from_descriptor
from .theory import t_cdf

__all__ = [
    "REPORT_SCHEMA_VERSION",
    "DEFAULT_PI_GRID",
    "DEFAULT_RULES",
    "DEFAULT_MASTER_SEED",
    "ExperimentConfig",
    "config_text",
    "parse_config_text",
    "config_hash",
    "run_experiment",
    "report_csv_text",
    "write_report",
    "read_report",
    "analyze_stream",
    "decision_csv_text",
    "read_pvalue_csv",
    "pvalue_csv_text",
    "TwoSampleDataset",
    "two_sample_pvalues",
    "read_expression_csv",
    "read_labels_csv",
    "build_two_sample_dataset",
    "overlap_fraction",
    "PRESET_NAMES",
    "preset_configs",
    "run_preset",
]

REPORT_SCHEMA_VERSION = 1
DEFAULT_PI_GRID = (0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5)
DEFAULT_RULES = (
    RuleKind.LOND,
    RuleKind.LOND_ADJUSTED,
    RuleKind.LORD,
    RuleKind.BONFERRONI,
    RuleKind.ALPHA_INVESTING,
)
DEFAULT_MASTER_SEED = 1729
DEFAULT_ALPHA = 0.05
DEFAULT_SCHEDULE = "log_power(alpha=0.05,nu=2.0,horizon=inf)"

_CONFIG_KEYS = (
    "rules",
    "n",
    "pis",
    "trials",
    "alpha",
    "scenario",
    "dependence",
    "schedule",
    "master_seed",
    "eta",
)


def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


@dataclasses.dataclass(frozen=True)
class ExperimentConfig:
    """Full description of one Monte Carlo sweep; hashable into the report
    header so downstream consumers can check provenance."""

    rules: tuple = DEFAULT_RULES
    n: int = 1000
    pis: tuple = DEFAULT_PI_GRID
    trials: int = 2000
    alpha: float = DEFAULT_ALPHA
    scenario: Scenario = Scenario.I
    dependence: DependenceSpec = INDEPENDENT
    schedule: str = DEFAULT_SCHEDULE
    master_seed: int = DEFAULT_MASTER_SEED
    eta: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(self.rules))
        object.__setattr__(self, "pis", tuple(float(x) for x in self.pis))
        if not self.rules:
            raise ValueError("at least one rule is required")
        for r in self.rules:
            if not isinstance(r, RuleKind):
                raise ValueError(f"not a rule kind: {r!r}")
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")
        if self.trials < 2:
            raise ValueError(f"trials must be >= 2, got {self.trials}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha!r}")
        if not self.pis:
            raise ValueError("at least one pi value is required")
        for pi in self.pis:
            if not 0.0 <= pi <= 1.0:
                raise ValueError(f"pi must be in [0, 1], got {pi!r}")
        if not self.eta >= 0.0:
            raise ValueError(f"eta must be >= 0, got {self.eta!r}")

    def schedule_obj(self) -> BetaSchedule:
        return from_descriptor(self.schedule)


def config_text(config: ExperimentConfig) -> str:
    """Flat key=value serialization; keys mirror the CLI flags."""
    values = {
        "rules": ",".join(r.value for r in config.rules),
        "n": str(config.n),
        "pis": ",".join(_fmt(pi) for pi in config.pis),
        "trials": str(config.trials),
        "alpha": _fmt(config.alpha),
        "scenario": config.scenario.value,
        "dependence": config.dependence.describe(),
        "schedule": config.schedule,
        "master_seed": str(config.master_seed),
        "eta": _fmt(config.eta),
    }
    return "".join(f"{k}={values[k]}\n" for k in _CONFIG_KEYS)


def parse_config_text(text: str) -> ExperimentConfig:
    """Parse key=value lines; unknown keys are errors, missing keys default."""
    fields: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno} is not key=value: {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _CONFIG_KEYS:
            raise ValueError(f"unknown config key on line {lineno}: {key!r}")
        if key in fields:
            raise ValueError(f"duplicate config key on line {lineno}: {key!r}")
        fields[key] = value
    kwargs = {}
    if "rules" in fields:
        kwargs["rules"] = tuple(
            RuleKind(tok.strip()) for tok in fields["rules"].split(",") if tok.strip()
        )
    if "n" in fields:
        kwargs["n"] = int(fields["n"])
    if "pis" in fields:
        kwargs["pis"] = tuple(
            float(tok) for tok in fields["pis"].split(",") if tok.strip()
        )
    if "trials" in fields:
        kwargs["trials"] = int(fields["trials"])
    if "alpha" in fields:
        kwargs["alpha"] = float(fields["alpha"])
    if "scenario" in fields:
        kwargs["scenario"] = Scenario(fields["scenario"])
    if "dependence" in fields:
        kwargs["dependence"] = DependenceSpec.from_descriptor(fields["dependence"])
    if "schedule" in fields:
        kwargs["schedule"] = fields["schedule"]
    if "master_seed" in fields:
        kwargs["master_seed"] = int(fields["master_seed"])
    if "eta" in fields:
        kwargs["eta"] = float(fields["eta"])
    return ExperimentConfig(**kwargs)


def config_hash(config: ExperimentConfig) -> str:
    return hashlib.sha256(config_text(config).encode("utf-8")).hexdigest()[:12]


def _build_rule(kind: RuleKind, schedule: BetaSchedule, alpha: float) -> Rule:
    if kind is RuleKind.ALPHA_INVESTING:
        return Rule(kind, alpha=alpha)
    return Rule(kind, schedule=schedule)


def _trial_counts(config: ExperimentConfig, rule_objs: list,
                  pi: float, trial: int) -> np.ndarray:
    """(num_rules + 2, 3) array of (D, V, U) for one trial; the last two rows
    are the offline baselines on the same stream."""
    n = config.n
    truth = sample_truth(
        n, pi, None,
        stream_rng(config.master_seed, n, pi, trial, StreamPurpose.TRUTH),
    )
    signs = None
    if config.dependence.kind is DependenceKind.EQUICORR_SIGNED:
        signs_rng = stream_rng(config.master_seed, n, pi, trial, StreamPurpose.SIGNS)
        signs = signs_rng.integers(0, 2, n) * 2 - 1
    stream = sample_statistics(
        truth, config.dependence,
        stream_rng(config.master_seed, n, pi, trial, StreamPurpose.NOISE),
        signs=signs,
    )
    stream, truth = apply_scenario(stream, truth, config.scenario)
    is_null = truth.is_null
    out = np.zeros((len(rule_objs) + 2, 3), dtype=np.int64)
    masks = [run_stream(rule, stream.pvalues).rejected for rule in rule_objs]
    masks.append(bh(stream.pvalues, config.alpha).rejected)
    masks.append(bh_adjusted(stream.pvalues, config.alpha).rejected)
    for row, mask in enumerate(masks):
        v = int(np.count_nonzero(mask & is_null))
        u = int(np.count_nonzero(mask & ~is_null))
        out[row] = (v + u, v, u)
    return out


def _run_chunk(args) -> np.ndarray:
    cfg_text, pi, lo, hi = args
    config = parse_config_text(cfg_text)
    schedule = config.schedule_obj()
    rule_objs = [_build_rule(k, schedule, config.alpha) for k in config.rules]
    out = np.empty((hi - lo, len(rule_objs) + 2, 3), dtype=np.int64)
    for offset, trial in enumerate(range(lo, hi)):
        out[offset] = _trial_counts(config, rule_objs, pi, trial)
    return out


def run_experiment(config: ExperimentConfig, workers: int = 1) -> list[ExperimentReport]:
    """Run the sweep and reduce each (rule, pi) cell to one report row.

    Rows are ordered rule-major (config order, then the `bh` and
    `bh_adjusted` baselines), pi-minor. Results are identical for any
    `workers` >= 1.
    """
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    cfg_text = config_text(config)
    config.schedule_obj()  # validate the descriptor before any work starts
    names = [k.value for k in config.rules] + ["bh", "bh_adjusted"]
    chunk = max(1, math.ceil(config.trials / (workers * 4)))
    tasks = [
        (cfg_text, pi, lo, min(lo + chunk, config.trials))
        for pi in config.pis
        for lo in range(0, config.trials, chunk)
    ]
    if workers == 1:
        results = [_run_chunk(task) for task in tasks]
    else:
        with multiprocessing.Pool(workers) as pool:
            results = pool.map(_run_chunk, tasks)
    per_pi = len(range(0, config.trials, chunk))
    reports: list[ExperimentReport] = []
    counts_by_pi = {}
    for idx, pi in enumerate(config.pis):
        block = results[idx * per_pi:(idx + 1) * per_pi]
        counts_by_pi[pi] = np.concatenate(block, axis=0)
    for row, name in enumerate(names):
        for pi in config.pis:
            counts = counts_by_pi[pi]
            outcomes = [
                TrialOutcome(D=int(c[0]), V=int(c[1]), U=int(c[2]))
                for c in counts[:, row, :]
            ]
            bh_row = len(config.rules)
            bh_outcomes = [
                TrialOutcome(D=int(c[0]), V=int(c[1]), U=int(c[2]))
                for c in counts[:, bh_row, :]
            ]
            reports.append(
                ExperimentReport.from_outcomes(
                    rule=name,
                    scenario=config.scenario.value,
                    dependence=config.dependence.describe(),
                    n=config.n,
                    pi=pi,
                    eta=config.eta,
                    outcomes=outcomes,
                    bh_outcomes=bh_outcomes,
                )
            )
    return reports


def report_csv_text(reports, config_texts: str, alpha: float) -> str:
    """Render report rows with a provenance header comment."""
    digest = hashlib.sha256(config_texts.encode("utf-8")).hexdigest()[:12]
    lines = [
        f"# streamfdr-report v{REPORT_SCHEMA_VERSION} config={digest} alpha={_fmt(alpha)}",
        ",".join(REPORT_COLUMNS),
    ]
    for report in reports:
        lines.append(",".join(_fmt(v) for v in report.to_row()))
    return "\n".join(lines) + "\n"


def write_report(reports, path: str, config_texts: str, alpha: float) -> None:
    text = report_csv_text(reports, config_texts, alpha)
    if path == "-":
        sys.stdout.write(text)
        return
    with open(path, "wb") as fh:
        fh.write(text.encode("utf-8"))


_INT_COLUMNS = {"n", "trials", "power_skipped"}
_STR_COLUMNS = {"rule", "scenario", "dependence"}


def read_report(path: str) -> tuple[dict, list[dict]]:
    """Parse a report CSV back into (header metadata, typed row dicts)."""
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline().rstrip("\n")
        if not first.startswith("# streamfdr-report "):
            raise ValueError(f"not a report CSV (bad header): {first!r}")
        meta = {}
        for token in first[len("# streamfdr-report "):].split():
            if token.startswith("v") and "=" not in token:
                meta["version"] = int(token[1:])
            else:
                key, _, value = token.partition("=")
                meta[key] = value
        columns = fh.readline().rstrip("\n").split(",")
        if columns[: len(REPORT_COLUMNS)] != REPORT_COLUMNS:
            raise ValueError("report CSV columns do not match the schema")
        rows = []
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            values = line.split(",")
            row = {}
            for col, val in zip(columns, values):
                if col in _STR_COLUMNS:
                    row[col] = val
                elif col in _INT_COLUMNS:
                    row[col] = int(val)
                else:
                    row[col] = float(val)
            rows.append(row)
    return meta, rows


def analyze_stream(pvalues, rule, schedule: BetaSchedule | None = None,
                   alpha: float | None = None) -> list[Decision]:
    """Run one online rule over a p-value vector and return its decisions."""
    kind = RuleKind(rule) if not isinstance(rule, RuleKind) else rule
    if kind is RuleKind.ALPHA_INVESTING:
        if alpha is None:
            raise ValueError("alpha_investing needs alpha (initial wealth)")
        rule_obj = Rule(kind, alpha=alpha)
    else:
        if schedule is None:
            raise ValueError(f"{kind.value} needs a spending schedule")
        rule_obj = Rule(kind, schedule=schedule)
    return run_stream(rule_obj, pvalues).decisions()


def decision_csv_text(decisions: list[Decision], kind: RuleKind,
                      schedule: BetaSchedule | None = None) -> str:
    """Decision log as CSV; the harmonically rescaled rule also reports its
    per-step base levels."""
    adjusted = kind is RuleKind.LOND_ADJUSTED
    header = ["index", "p", "alpha", "rejected"]
    base_levels = None
    if adjusted:
        if schedule is None:
            raise ValueError("the rescaled rule needs its schedule to report levels")
        header.append("beta_adjusted")
        n = len(decisions)
        if n:
            base_levels = schedule.eval(np.arange(1, n + 1)) / harmonic_numbers(n)
    lines = [",".join(header)]
    for i, d in enumerate(decisions):
        row = [str(d.index), _fmt(d.pvalue), _fmt(d.alpha_used), str(int(d.rejected))]
        if adjusted:
            row.append(_fmt(float(base_levels[i])))
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def read_pvalue_csv(path: str) -> tuple[np.ndarray, np.ndarray | None]:
    """Read a p-value CSV: required column `p`, optional boolean `truth`
    marking non-null hypotheses."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "p" not in reader.fieldnames:
            raise ValueError("p-value CSV needs a header with a `p` column")
        has_truth = "truth" in reader.fieldnames
        pvalues = []
        truth = [] if has_truth else None
        for lineno, row in enumerate(reader, start=2):
            pvalues.append(float(row["p"]))
            if has_truth:
                token = row["truth"].strip().lower()
                if token in ("1", "true"):
                    truth.append(True)
                elif token in ("0", "false"):
                    truth.append(False)
                else:
                    raise ValueError(
                        f"line {lineno}: truth must be 0/1/true/false, got {row['truth']!r}"
                    )
    p = np.asarray(pvalues, dtype=np.float64)
    return p, (np.asarray(truth, dtype=bool) if has_truth else None)


def pvalue_csv_text(pvalues, truth=None) -> str:
    p = np.asarray(pvalues, dtype=np.float64)
    if truth is None:
        lines = ["p"] + [_fmt(float(x)) for x in p]
    else:
        truth = np.asarray(truth, dtype=bool)
        lines = ["p,truth"] + [
            f"{_fmt(float(x))},{int(t)}" for x, t in zip(p, truth)
        ]
    return "\n".join(lines) + "\n"


@dataclasses.dataclass(frozen=True)
class TwoSampleDataset:
    """Expression matrix (genes x subjects) with a 0/1 group label per
    subject (0 = control, 1 = case)."""

    expression: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        expr = np.asarray(self.expression, dtype=np.float64)
        labels = np.asarray(self.labels)
        object.__setattr__(self, "expression", expr)
        object.__setattr__(self, "labels", labels)
        if expr.ndim != 2:
            raise ValueError("expression must be a genes x subjects matrix")
        if labels.ndim != 1 or labels.size != expr.shape[1]:
            raise ValueError("need exactly one group label per subject column")
        if not np.all(np.isin(labels, (0, 1))):
            raise ValueError("labels must be 0 (control) or 1 (case)")
        if self.m1 < 2 or self.m2 < 2:
            raise ValueError("each group needs at least 2 subjects")

    @property
    def m1(self) -> int:
        return int(np.count_nonzero(self.labels == 0))

    @property
    def m2(self) -> int:
        return int(np.count_nonzero(self.labels == 1))


def two_sample_pvalues(data: TwoSampleDataset) -> np.ndarray:
    """Two-sided pooled-variance t-test per gene.

    t = (case mean - control mean) / s with
    s^2 = (1/(m-2)) (1/m1 + 1/m2) (SS_control + SS_case),
    p = 2 (1 - T_cdf(|t|, m-2)). Genes with zero pooled variance are an
    error, reported by index.
    """
    g1 = data.expression[:, data.labels == 0]
    g2 = data.expression[:, data.labels == 1]
    m1, m2 = data.m1, data.m2
    m = m1 + m2
    ss1 = np.sum((g1 - g1.mean(axis=1, keepdims=True)) ** 2, axis=1)
    ss2 = np.sum((g2 - g2.mean(axis=1, keepdims=True)) ** 2, axis=1)
    s2 = (1.0 / (m - 2)) * (1.0 / m1 + 1.0 / m2) * (ss1 + ss2)
    flat = np.flatnonzero(s2 <= 0.0)
    if flat.size:
        shown = ", ".join(str(int(i)) for i in flat[:10])
        suffix = ", ..." if flat.size > 10 else ""
        raise ValueError(
            f"zero pooled variance (constant expression) at gene index(es) "
            f"{shown}{suffix}"
        )
    t = (g2.mean(axis=1) - g1.mean(axis=1)) / np.sqrt(s2)
    return 2.0 * (1.0 - t_cdf(np.abs(t), m - 2))


def read_expression_csv(path: str) -> tuple[list[str], list[str], np.ndarray]:
    """Expression CSV: header `gene,<subject>,<subject>,...`, one row per
    gene. Returns (gene ids, subject ids, matrix)."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError("expression CSV is empty") from None
        if len(header) < 2:
            raise ValueError("expression CSV needs a gene column plus subjects")
        subjects = [h.strip() for h in header[1:]]
        genes = []
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError(f"line {lineno}: expected {len(header)} fields")
            genes.append(row[0].strip())
            rows.append([float(x) for x in row[1:]])
    if not genes:
        raise ValueError("expression CSV has no gene rows")
    return genes, subjects, np.asarray(rows, dtype=np.float64)


def read_labels_csv(path: str) -> dict:
    """Label CSV: header `subject,label`, labels `control` or `case`."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"subject", "label"} <= set(reader.fieldnames):
            raise ValueError("label CSV needs `subject` and `label` columns")
        labels = {}
        for lineno, row in enumerate(reader, start=2):
            subject = row["subject"].strip()
            label = row["label"].strip().lower()
            if label not in ("control", "case"):
                raise ValueError(
                    f"line {lineno}: label must be control or case, got {row['label']!r}"
                )
            if subject in labels:
                raise ValueError(f"line {lineno}: duplicate subject {subject!r}")
            labels[subject] = 0 if label == "control" else 1
    return labels


def build_two_sample_dataset(subjects: list[str], matrix: np.ndarray,
                             label_map: dict) -> TwoSampleDataset:
    missing = [s for s in subjects if s not in label_map]
    if missing:
        raise ValueError(f"subjects missing from the label CSV: {missing[:5]}")
    labels = np.array([label_map[s] for s in subjects], dtype=np.int64)
    return TwoSampleDataset(expression=matrix, labels=labels)


def overlap_fraction(rejections: np.ndarray, baseline: np.ndarray) -> float:
    """Fraction of `rejections` also rejected by `baseline`; 1.0 when the
    first set is empty (vacuously contained)."""
    rejections = np.asarray(rejections, dtype=bool)
    baseline = np.asarray(baseline, dtype=bool)
    if rejections.shape != baseline.shape:
        raise ValueError("rejection masks must have matching shapes")
    total = int(np.count_nonzero(rejections))
    if total == 0:
        return 1.0
    return float(np.count_nonzero(rejections & baseline) / total)


PRESET_NAMES = (
    "scenario1-indep",
    "scenario2-indep",
    "scenario1-dep",
    "scenario2-dep",
    "discovery-curves",
)


def preset_configs(name: str, trials: int | None = None,
                   master_seed: int | None = None) -> tuple[ExperimentConfig, ...]:
    """Named sweep presets. The four scenario presets cover the two hypothesis
    orderings crossed with independent / sign-flipped equicorrelated noise;
    `discovery-curves` sweeps n to expose discovery growth."""
    if name not in PRESET_NAMES:
        raise ValueError(f"unknown preset {name!r}; choices: {', '.join(PRESET_NAMES)}")
    seed = DEFAULT_MASTER_SEED if master_seed is None else int(master_seed)
    if name == "discovery-curves":
        t = 400 if trials is None else int(trials)
        return tuple(
            ExperimentConfig(
                rules=(RuleKind.LOND, RuleKind.LORD),
                n=n,
                pis=(0.01, 0.05, 0.2),
                trials=t,
                scenario=Scenario.I,
                dependence=INDEPENDENT,
                master_seed=seed,
            )
            for n in (1000, 2000, 4000, 8000)
        )
    t = 2000 if trials is None else int(trials)
    scenario = Scenario.I if name.startswith("scenario1") else Scenario.II
    dependence = equicorrelated(0.5) if name.endswith("-dep") else INDEPENDENT
    return (
        ExperimentConfig(
            scenario=scenario,
            dependence=dependence,
            trials=t,
            master_seed=seed,
        ),
    )


def run_preset(name: str, workers: int = 1, trials: int | None = None,
               master_seed: int | None = None) -> str:
    """Run a preset and return the report CSV text (possibly spanning several
    configs, e.g. the n sweep)."""
    configs = preset_configs(name, trials=trials, master_seed=master_seed)
    reports = []
    for config in configs:
        reports.extend(run_experiment(config, workers=workers))
    joined = "".join(config_text(c) for c in configs)
    return report_csv_text(reports, joined, configs[0].alpha)
