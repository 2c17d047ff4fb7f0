"""
Result aggregation and output.

Collects per-trial records, computes the trial averages and writes the
plot-ready CSV, the optional parquet table and a console summary.
"""

import math
from dataclasses import asdict
from pathlib import Path

import pandas as pd

from .errors import ConfigError
from .models import ResultRecord, Scheme

CSV_COLUMNS = [
    "scheme",
    "axis",
    "axis_value",
    "trial",
    "r_outer_common",
    "r_inner_common_total",
    "r_private_total",
    "sum_rate_bps_hz",
]

RATE_FIELDS = ("r_outer_common", "r_inner_common_total", "r_private_total", "sum_rate", "bit_rate_bps")

SCHEME_ORDER = {scheme: i for i, scheme in enumerate(Scheme)}


def record_key(record: ResultRecord) -> tuple[int, float, int]:
    """Stable output order: scheme, axis value, trial."""
    return (SCHEME_ORDER[record.scheme], record.axis_value, record.trial)


class ResultAggregator:
    """
    Aggregates sweep records.

    A trial counts towards the averages only if none of its schemes was
    skipped.
    """

    def __init__(self):
        self.records: list[ResultRecord] = []

    def add(self, records) -> None:
        """Add the records of one trial."""
        self.records.extend(records)

    def skipped_trials(self) -> set[tuple[float, int]]:
        """(axis_value, trial) pairs skipped for at least one scheme."""
        return {(r.axis_value, r.trial) for r in self.records if r.skipped}

    def averaged(self) -> list[ResultRecord]:
        """
        One averaged record (trial = -1) per scheme and axis value.

        Points without a feasible trial get no averaged record.
        """
        skipped = self.skipped_trials()
        groups: dict[tuple[Scheme, float], list[ResultRecord]] = {}
        for r in self.records:
            if r.trial >= 0 and (r.axis_value, r.trial) not in skipped:
                groups.setdefault((r.scheme, r.axis_value), []).append(r)
        averaged = []
        for (scheme, value), rows in groups.items():
            n = len(rows)
            means = {f: math.fsum(getattr(r, f) for r in rows) / n for f in RATE_FIELDS}
            averaged.append(
                ResultRecord(
                    scheme=scheme,
                    axis=rows[0].axis,
                    axis_value=value,
                    trial=-1,
                    num_users=rows[0].num_users,
                    num_groups=rows[0].num_groups,
                    snr_db=math.fsum(r.snr_db for r in rows) / n,
                    **means,
                )
            )
        return averaged

    def compute(self) -> list[ResultRecord]:
        """Per-trial and averaged records in output order."""
        return sorted([*self.records, *self.averaged()], key=record_key)

    def to_dataframe(self) -> pd.DataFrame:
        """Convert records to pandas DataFrame."""
        return records_to_frame(self.compute())


def records_to_frame(records: list[ResultRecord]) -> pd.DataFrame:
    """Full record table, enums as their string values."""
    if not records:
        return pd.DataFrame()
    df = pd.DataFrame([asdict(r) for r in records])
    df["scheme"] = [r.scheme.value for r in records]
    df["axis"] = [r.axis.value for r in records]
    return df


def emit_csv(records: list[ResultRecord], path: str | Path) -> None:
    """
    Write the eight-column sweep CSV.

    Rates are written with 15 significant digits; skipped rows leave
    their rate fields empty.

    Args:
        records: Records to write (sorted by scheme, axis value, trial)
        path: Output CSV path
    """
    if not records:
        raise ConfigError("no records to write")
    df = records_to_frame(sorted(records, key=record_key))
    df = df.rename(columns={"sum_rate": "sum_rate_bps_hz"})[CSV_COLUMNS]
    df.to_csv(path, index=False, float_format="%.15g", na_rep="", lineterminator="\n")


def write_parquet(records: list[ResultRecord], path: str | Path) -> None:
    """Write the full record table (every field) as parquet."""
    if not records:
        raise ConfigError("no records to write")
    records_to_frame(records).to_parquet(path, index=False)


def scheme_summary(records: list[ResultRecord]) -> pd.DataFrame:
    """Averaged sum rate per axis value (rows) and scheme (columns)."""
    df = records_to_frame([r for r in records if r.trial == -1])
    if df.empty:
        return df
    table = df.pivot(index="axis_value", columns="scheme", values="sum_rate")
    return table[[s.value for s in Scheme if s.value in table.columns]]


def print_summary(records: list[ResultRecord]) -> None:
    """Print the averaged sum rates of a sweep."""
    print("\n=== Sweep Summary (sum rate, bits/s/Hz) ===")
    table = scheme_summary(records)
    if table.empty:
        print("  No feasible sweep point")
    else:
        print(table.to_string(float_format=lambda v: f"{v:.3f}"))
    skipped = {(r.axis_value, r.trial) for r in records if r.skipped}
    print(f"  Skipped trials: {len(skipped)}")
    print("=" * 30)
