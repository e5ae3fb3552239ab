"""Figure rendering for streamfdr report CSVs.

The package consumes only the versioned report CSV schema (provenance
header plus typed columns); it does not depend on the simulation library.
"""

from .plots import METRICS, plot_discovery_curves, plot_metric
from .report import REQUIRED_COLUMNS, SCHEMA_VERSION, ReportTable, load_report

__all__ = [
    "METRICS",
    "REQUIRED_COLUMNS",
    "SCHEMA_VERSION",
    "ReportTable",
    "load_report",
    "plot_discovery_curves",
    "plot_metric",
]
