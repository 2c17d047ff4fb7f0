#!/usr/bin/env python3
"""
Quick sweep results checker.

Usage:
    python quick_check.py results/snr.csv
    python quick_check.py $(ls -t results/*.csv | head -1)  # Check latest sweep
"""

import sys
from pathlib import Path

import pandas as pd

SCHEMES = ["OMA", "RS", "HRS", "HRS_OPT"]


def main():
    """Main entry point."""
    if len(sys.argv) < 2:
        # Try to find the latest sweep
        results_dir = Path("results")
        csvs = sorted(results_dir.glob("*.csv"), key=lambda x: x.stat().st_mtime, reverse=True) if results_dir.exists() else []
        if not csvs:
            print("Usage: python quick_check.py <sweep.csv>")
            print("No sweeps found in results/")
            sys.exit(1)
        path = csvs[0]
        print(f"Using latest sweep: {path}\n")
    else:
        path = Path(sys.argv[1])

    if not path.exists():
        print(f"Error: Sweep file not found: {path}")
        sys.exit(1)

    df = pd.read_csv(path)
    axis = df["axis"].iloc[0]
    averaged = df[df["trial"] == -1]
    trials = df[df["trial"] >= 0]

    print("=" * 50)
    print(f"Sweep Results: {path.name} (axis: {axis})")
    print("=" * 50)

    # Averaged sum rate per scheme
    print("\n📊 Average Sum Rate (bits/s/Hz):")
    table = averaged.pivot(index="axis_value", columns="scheme", values="sum_rate_bps_hz")
    table = table[[s for s in SCHEMES if s in table.columns]]
    if table.empty:
        print("  No feasible sweep point")
    else:
        print(table.to_string(float_format=lambda v: f"{v:8.3f}"))

    # Rate composition of the HRS schemes
    print("\n🧩 Rate Composition (averages):")
    for scheme in ("RS", "HRS", "HRS_OPT"):
        rows = averaged[averaged["scheme"] == scheme]
        if rows.empty:
            continue
        print(f"  {scheme}:")
        for _, row in rows.iterrows():
            print(
                f"    {row['axis_value']:>6g}: outer {row['r_outer_common']:7.3f}  "
                f"inner {row['r_inner_common_total']:7.3f}  private {row['r_private_total']:7.3f}"
            )

    # Scheme orderings
    print("\n📈 Orderings per point:")
    pairs = [("HRS_OPT", "HRS"), ("HRS", "RS"), ("RS", "OMA")]
    for high, low in pairs:
        if high not in table.columns or low not in table.columns:
            continue
        holds = (table[high] >= table[low]).sum()
        ratio = (table[high] / table[low]).mean()
        print(f"  {high:>7s} >= {low:<7s}: {holds}/{len(table)} points (mean ratio {ratio:.3f})")

    # Skipped trials
    print("\n⚠️  Skipped Trials:")
    skipped = trials[trials["sum_rate_bps_hz"].isna()]
    per_point = skipped.drop_duplicates(["axis_value", "trial"]).groupby("axis_value").size()
    total = trials.drop_duplicates(["axis_value", "trial"]).groupby("axis_value").size()
    for value, count in total.items():
        print(f"  {value:>6g}: {per_point.get(value, 0):>4d}/{count} skipped")

    print("\n" + "=" * 50)
    meta = path.with_suffix(".meta.jsonl")
    if meta.exists():
        print(f"\nRun metadata available at: {meta}")


if __name__ == "__main__":
    main()
