"""Loading and validation of report CSVs.

A report CSV starts with a one-line provenance comment

    # streamfdr-report v<version> config=<12-hex-digest> alpha=<level>

followed by a plain CSV table. The loader checks the schema version and the
presence of the stable columns, and fingerprints the raw bytes so output
filenames can be derived purely from the input content.
"""

from __future__ import annotations

import dataclasses
import hashlib
import io
import re

import pandas as pd

SCHEMA_VERSION = 1

REQUIRED_COLUMNS = [
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
]

_HEADER_RE = re.compile(
    r"^# streamfdr-report v(\d+) config=([0-9a-f]{12}) alpha=(\S+)$"
)


@dataclasses.dataclass(frozen=True)
class ReportTable:
    """One parsed report: provenance header fields plus the row table.

    `digest` is the sha256 of the raw file bytes; plot filenames are pure
    functions of it, so re-rendering the same CSV always targets the same
    paths.
    """

    version: int
    config_hash: str
    alpha: float
    digest: str
    frame: pd.DataFrame


def load_report(path: str) -> ReportTable:
    with open(path, "rb") as fh:
        raw = fh.read()
    text = raw.decode("utf-8")
    first, _, rest = text.partition("\n")
    match = _HEADER_RE.match(first)
    if match is None:
        raise ValueError(
            f"{path!r} is not a report CSV: missing the provenance header line"
        )
    version = int(match.group(1))
    if version != SCHEMA_VERSION:
        raise ValueError(
            f"unsupported report schema v{version}; this reader handles "
            f"v{SCHEMA_VERSION}"
        )
    frame = pd.read_csv(io.StringIO(rest))
    missing = [c for c in REQUIRED_COLUMNS if c not in frame.columns]
    if missing:
        raise ValueError(f"report is missing column(s): {', '.join(missing)}")
    return ReportTable(
        version=version,
        config_hash=match.group(2),
        alpha=float(match.group(3)),
        digest=hashlib.sha256(raw).hexdigest(),
        frame=frame,
    )
