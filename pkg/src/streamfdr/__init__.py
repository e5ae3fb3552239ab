"""Online false discovery rate control over p-value streams.

Building blocks:

- `schedules`: spending sequences that split an error budget across a stream.
- `rules`: online testing rules (discovery-count scaling, schedule restart,
  budget rescaling, wealth investing) plus single-step and whole-stream APIs.
- `offline`: step-up baselines computed from the full batch.
- `simulate`: mixture-model truth/statistic generation with keyed, parallel-
  safe randomness.
- `metrics`: FDP/FDR, ratio-of-expectations variants, relative power.
- `theory`: special functions and closed-form rate quantities.
- `harness`: experiment configs, Monte Carlo sweeps, CSV IO, presets, and a
  two-sample t pipeline; `cli` exposes it all as the `streamfdr` command.
"""

from .harness import (
    DEFAULT_MASTER_SEED,
    DEFAULT_PI_GRID,
    DEFAULT_RULES,
    ExperimentConfig,
    PRESET_NAMES,
    TwoSampleDataset,
    analyze_stream,
    config_hash,
    config_text,
    overlap_fraction,
    parse_config_text,
    preset_configs,
    read_report,
    report_csv_text,
    run_experiment,
    run_preset,
    two_sample_pvalues,
    write_report,
)
from .metrics import (
    ExperimentReport,
    REPORT_COLUMNS,
    TrialOutcome,
    estimate_fdr,
    estimate_mfdr,
    fdp,
    fwer,
    outcome_from_masks,
    relative_power,
    relative_power_stats,
)
from .offline import BhResult, bh, bh_adjusted
from .rules import (
    ALPHA_CAP,
    Decision,
    DecisionLog,
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
from .schedules import (
    BetaSchedule,
    Family,
    from_descriptor,
    make_log_boost,
    make_log_power,
    make_power_law,
    make_shifted_log,
)
from .simulate import (
    INDEPENDENT,
    DependenceKind,
    DependenceSpec,
    PvalueStream,
    Scenario,
    StreamPurpose,
    TrialTruth,
    apply_scenario,
    default_sigma2,
    equicorrelated,
    implied_covariance,
    sample_statistics,
    sample_truth,
    sample_truth_fixed_effect,
    stream_rng,
)
from .theory import (
    AlternativeModel,
    RateBoundParams,
    alt_cdf,
    alt_cdf_lower_bound,
    lond_rate_bound,
    lord_rate,
    marginal_cdf,
    normal_cdf,
    normal_quantile,
    t_cdf,
)

__version__ = "0.1.0"
