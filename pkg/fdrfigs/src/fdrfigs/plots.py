"""Figure rendering from report tables.

Figures are drawn on standalone Figure objects (no pyplot state) so batch
rendering is headless and deterministic. Every validation runs before any
file is opened; a failed call never leaves a partial image behind.
"""

from __future__ import annotations

import os

import matplotlib
from matplotlib import colormaps
from matplotlib.figure import Figure

from .report import ReportTable

# Metric column -> its standard-error column, used for the error bars.
METRICS = {
    "fdr": "fdr_se",
    "mfdr": "mfdr_se",
    "power_rel_bh": "power_se",
}

DEFAULT_DPI = 100

_LINESTYLES = ["-", "--", "-.", ":"]


def output_stem(table: ReportTable, figure_name: str) -> str:
    """Filename stem, a pure function of (input content hash, figure name)."""
    return f"{table.digest[:12]}-{figure_name}"


def _require_columns(table: ReportTable, columns) -> None:
    missing = [c for c in columns if c not in table.frame.columns]
    if missing:
        raise ValueError(f"report is missing column(s): {', '.join(missing)}")


def _save(fig: Figure, out_dir: str, stem: str, dpi: int) -> list[str]:
    png = os.path.join(out_dir, f"{stem}.png")
    svg = os.path.join(out_dir, f"{stem}.svg")
    fig.savefig(png, dpi=dpi)
    # Pin the element-id salt and drop the date stamp so the vector output
    # is byte-stable across renders.
    with matplotlib.rc_context({"svg.hashsalt": stem}):
        fig.savefig(svg, metadata={"Date": None})
    return [png, svg]


def plot_metric(table: ReportTable, metric: str, out_dir: str,
                dpi: int = DEFAULT_DPI) -> list[str]:
    """Plot one estimate column against pi, one error-bar line per rule.

    Writes `<digest>-<metric>.png` and `.svg` under `out_dir` and returns
    the paths. Rows whose estimate is NaN (for example relative power where
    the baseline never rejected) are dropped; an all-NaN or empty table is
    an error and nothing is written.
    """
    if metric not in METRICS:
        choices = ", ".join(sorted(METRICS))
        raise ValueError(f"unknown metric {metric!r}; choices: {choices}")
    se_col = METRICS[metric]
    _require_columns(table, ["rule", "pi", "n", metric, se_col])
    rows = table.frame.dropna(subset=[metric])
    if rows.empty:
        raise ValueError(f"no rows with a finite {metric}; nothing to plot")
    sizes = sorted(rows["n"].unique())
    if len(sizes) > 1:
        raise ValueError(
            f"table mixes several stream lengths (n={sizes}); "
            "filter to a single n before plotting a metric against pi"
        )
    fig = Figure(figsize=(6.4, 4.2))
    ax = fig.add_subplot()
    for rule, group in rows.groupby("rule", sort=True):
        group = group.sort_values("pi")
        ax.errorbar(
            group["pi"],
            group[metric],
            yerr=group[se_col].fillna(0.0),
            marker="o",
            markersize=4,
            capsize=3,
            linewidth=1.2,
            label=str(rule),
        )
    ax.axhline(table.alpha, color="black", linestyle="--", linewidth=1.0,
               label=f"alpha={table.alpha:g}")
    ax.set_xlabel("pi")
    ax.set_ylabel(metric)
    ax.set_title(f"{metric} vs pi (n={sizes[0]})")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, out_dir, output_stem(table, metric), dpi)


def plot_discovery_curves(table: ReportTable, out_dir: str,
                          dpi: int = DEFAULT_DPI) -> list[str]:
    """Plot mean discovery count against stream length.

    One line per (rule, pi) pair: color encodes pi, line style encodes the
    rule. Writes `<digest>-discovery-curves.png` and `.svg` and returns the
    paths.
    """
    _require_columns(table, ["rule", "pi", "n", "mean_D"])
    rows = table.frame.dropna(subset=["mean_D"])
    if rows.empty:
        raise ValueError("no rows with a finite mean_D; nothing to plot")
    pis = sorted(rows["pi"].unique())
    rules = sorted(rows["rule"].unique())
    cmap = colormaps["viridis"]
    shade = {
        pi: cmap(0.15 + 0.7 * i / max(len(pis) - 1, 1))
        for i, pi in enumerate(pis)
    }
    fig = Figure(figsize=(6.4, 4.2))
    ax = fig.add_subplot()
    for r, rule in enumerate(rules):
        style = _LINESTYLES[r % len(_LINESTYLES)]
        for pi in pis:
            group = rows[(rows["rule"] == rule) & (rows["pi"] == pi)]
            if group.empty:
                continue
            group = group.sort_values("n")
            ax.plot(
                group["n"],
                group["mean_D"],
                linestyle=style,
                marker="o",
                markersize=4,
                linewidth=1.2,
                color=shade[pi],
                label=f"{rule} pi={pi:g}",
            )
    ax.set_xlabel("stream length n")
    ax.set_ylabel("mean discoveries")
    ax.set_title("discovery growth")
    ax.legend(fontsize=7)
    fig.tight_layout()
    return _save(fig, out_dir, output_stem(table, "discovery-curves"), dpi)


def render_report(table: ReportTable, out_dir: str,
                  dpi: int = DEFAULT_DPI,
                  metrics=None) -> list[str]:
    """Render the natural figure set for a report.

    A table sweeping several stream lengths gets the discovery-curve figure;
    a single-length table gets one figure per metric (all of METRICS unless
    `metrics` narrows the list).
    """
    if table.frame["n"].nunique() > 1 and metrics is None:
        return plot_discovery_curves(table, out_dir, dpi=dpi)
    written: list[str] = []
    for metric in metrics if metrics is not None else sorted(METRICS):
        written.extend(plot_metric(table, metric, out_dir, dpi=dpi))
    return written
