import math

import numpy as np
import pandas as pd
import pytest

from sim.config import RunSettings
from sim.engine import SweepEngine, point_groups, point_scene, point_users, run_sweep, run_trial, trial_seed
from sim.errors import ConfigError
from sim.kpi import emit_csv
from sim.models import NoiseParams, Scheme, SweepAxis, SweepSpec

FAST = RunSettings(trials=3, seed=7)


def _frame(records) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "scheme": [r.scheme.value for r in records],
            "axis_value": [r.axis_value for r in records],
            "trial": [r.trial for r in records],
            "sum_rate": [r.sum_rate for r in records],
            "skipped": [r.skipped for r in records],
        }
    )


def test_snr_sweep_rows_and_averages(scene):
    spec = FAST.sweep_spec(SweepAxis.SNR_DB, [5.0, 15.0])
    records = run_sweep(spec, scene)
    df = _frame(records)
    trials = df[df["trial"] >= 0]
    assert len(trials) == 4 * 2 * 3
    skipped = set(map(tuple, trials.loc[trials["skipped"], ["axis_value", "trial"]].to_numpy()))
    for (scheme, value), rows in trials.groupby(["scheme", "axis_value"]):
        feasible = [
            r for r, t in zip(rows["sum_rate"], rows["trial"]) if (value, t) not in skipped
        ]
        averaged = df[(df["trial"] == -1) & (df["scheme"] == scheme) & (df["axis_value"] == value)]
        if feasible:
            assert averaged["sum_rate"].iloc[0] == pytest.approx(math.fsum(feasible) / len(feasible), rel=1e-12)
        else:
            assert averaged.empty


def test_records_sorted_by_scheme_value_trial(scene):
    records = run_sweep(FAST.sweep_spec(SweepAxis.SNR_DB, [5.0, 15.0]), scene)
    keys = [(list(Scheme).index(r.scheme), r.axis_value, r.trial) for r in records]
    assert keys == sorted(keys)


def test_skipped_trial_skips_every_scheme(scene):
    records = run_sweep(FAST.sweep_spec(SweepAxis.SNR_DB, [10.0]), scene)
    by_trial: dict[int, set[bool]] = {}
    for r in records:
        if r.trial >= 0:
            by_trial.setdefault(r.trial, set()).add(r.skipped)
    assert all(len(flags) == 1 for flags in by_trial.values())


def test_csv_is_reproducible(scene, tmp_path):
    spec = FAST.sweep_spec(SweepAxis.SNR_DB, [5.0, 15.0], schemes=(Scheme.OMA, Scheme.RS, Scheme.HRS))
    a, b, c = tmp_path / "a.csv", tmp_path / "b.csv", tmp_path / "c.csv"
    emit_csv(run_sweep(spec, scene), a)
    emit_csv(run_sweep(spec, scene), b)
    emit_csv(run_sweep(spec, scene, workers=2), c)
    assert a.read_bytes() == b.read_bytes()
    assert a.read_bytes() == c.read_bytes()


def test_placements_shared_across_snr_points():
    spec = SweepSpec(axis=SweepAxis.SNR_DB, values=(5.0, 10.0))
    assert np.array_equal(trial_seed(spec, 0, 3).generate_state(4), trial_seed(spec, 1, 3).generate_state(4))
    assert not np.array_equal(trial_seed(spec, 0, 3).generate_state(4), trial_seed(spec, 0, 4).generate_state(4))


def test_placements_independent_across_user_counts():
    spec = SweepSpec(axis=SweepAxis.NUM_USERS, values=(2.0, 3.0), common_placements=True)
    assert not spec.uses_common_placements
    assert not np.array_equal(trial_seed(spec, 0, 0).generate_state(4), trial_seed(spec, 1, 0).generate_state(4))


def test_point_users_and_groups():
    users = SweepSpec(axis=SweepAxis.NUM_USERS, values=(2.0, 9.0))
    assert point_users(users, 9.0) == 9
    assert point_groups(users, 9) == 3
    assert point_groups(users, 4) == 1
    with pytest.raises(ConfigError):
        point_users(users, 2.5)
    snr = SweepSpec(axis=SweepAxis.SNR_DB, values=(5.0,), num_users=6)
    assert point_users(snr, 5.0) == 6
    assert point_groups(snr, 6) == 2
    fixed = SweepSpec(axis=SweepAxis.SNR_DB, values=(5.0,), groups=3)
    assert point_groups(fixed, 6) == 3


def test_point_scene_sets_beam_waist(scene):
    spec = SweepSpec(axis=SweepAxis.BEAM_WAIST_UM, values=(5.0, 30.0))
    assert point_scene(spec, scene, 25.0).vcsel.w0 == pytest.approx(25e-6)
    assert point_scene(SweepSpec(axis=SweepAxis.SNR_DB, values=(5.0,)), scene, 25.0) is scene


def test_beam_sweep_runs_in_physical_mode(scene):
    spec = SweepSpec(axis=SweepAxis.BEAM_WAIST_UM, values=(10.0, 20.0), schemes=(Scheme.OMA,), trials=2)
    outcome = run_trial(spec, scene, NoiseParams(), 0, 0)
    (record,) = outcome.records
    assert not record.skipped
    assert record.num_groups == 0
    assert not math.isnan(record.snr_db)
    assert record.snr_db != spec.snr_db


def test_records_carry_absolute_bit_rate(scene):
    spec = SweepSpec(axis=SweepAxis.SNR_DB, values=(15.0,), schemes=(Scheme.OMA, Scheme.RS), trials=1)
    outcome = run_trial(spec, scene, NoiseParams(bandwidth=1e9), 0, 0)
    for record in outcome.records:
        if not record.skipped:
            assert record.bit_rate_bps == pytest.approx(record.sum_rate * 1e9, rel=1e-12)


def test_too_many_users_for_zero_forcing(colocated_scene):
    spec = SweepSpec(axis=SweepAxis.SNR_DB, values=(15.0,), schemes=(Scheme.RS,), trials=5, num_users=5)
    records = run_sweep(spec, colocated_scene)
    assert all(r.skipped for r in records)
    assert all(r.reason.startswith(("K>L", "coverage")) for r in records)
    assert not [r for r in records if r.trial == -1]


def test_progress_reports_every_point(scene):
    calls = []
    spec = SweepSpec(axis=SweepAxis.SNR_DB, values=(5.0, 10.0), schemes=(Scheme.OMA,), trials=2)
    SweepEngine(spec, scene, NoiseParams(), progress=lambda v, f, t: calls.append((v, t))).run()
    assert calls == [(5.0, 2), (10.0, 2)]
