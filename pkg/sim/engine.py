"""
Monte Carlo sweep engine.

Runs independent trials (random user placement, channel, every requested
scheme) over the values of one swept axis. Trials run in parallel with
joblib and are reduced in a fixed order, so the output does not depend
on the number of workers.
"""

import math
from collections.abc import Callable
from dataclasses import dataclass, replace

import numpy as np
from joblib import Parallel, delayed

from .channel import build_channel, normalize_channel, physical_snr_db
from .errors import ConfigError, InfeasibleError
from .geometry import place_users_random, user_positions
from .hrs import default_groups, hrs_rates, hrs_split, kmeans_group
from .kpi import ResultAggregator
from .models import (
    NoiseParams,
    RateBreakdown,
    ResultRecord,
    Scene,
    Scheme,
    SweepAxis,
    SweepSpec,
)
from .optimizer import optimize_hrs
from .precoding import hrs_precoders, rs_precoders
from .ratesplit import oma_rates, rs_rates, rs_split


@dataclass(frozen=True)
class TrialOutcome:
    """Records of one trial, one per scheme."""
    axis_index: int
    trial: int
    records: tuple[ResultRecord, ...]

    @property
    def skipped(self) -> bool:
        return any(r.skipped for r in self.records)


def trial_seed(spec: SweepSpec, axis_index: int, trial: int) -> np.random.SeedSequence:
    """Seed of one trial; placements are shared across axis values when configured."""
    index = 0 if spec.uses_common_placements else axis_index
    return np.random.SeedSequence(spec.seed, spawn_key=(index, trial))


def point_users(spec: SweepSpec, value: float) -> int:
    """User count K at one sweep point."""
    if spec.axis is SweepAxis.NUM_USERS:
        k = int(round(value))
        if k < 1 or not math.isclose(k, value):
            raise ConfigError(f"user count must be a positive integer, got {value}")
        return k
    return spec.num_users


def point_groups(spec: SweepSpec, k: int) -> int:
    """Group count G at one sweep point."""
    if spec.groups is not None:
        return spec.groups
    if spec.axis is SweepAxis.NUM_USERS:
        return math.ceil(k / 4)
    return default_groups(k)


def point_scene(spec: SweepSpec, scene: Scene, value: float) -> Scene:
    """Scene at one sweep point (the beam-waist axis is in micrometers)."""
    if spec.axis is SweepAxis.BEAM_WAIST_UM:
        return replace(scene, vcsel=replace(scene.vcsel, w0=value * 1e-6))
    return scene


def _record(
    spec: SweepSpec, value: float, trial: int, rates: RateBreakdown, k: int, g: int, snr: float, bandwidth: float
) -> ResultRecord:
    return ResultRecord(
        scheme=rates.scheme,
        axis=spec.axis,
        axis_value=value,
        trial=trial,
        r_outer_common=rates.r_outer_common,
        r_inner_common_total=rates.r_inner_common_total,
        r_private_total=rates.r_private_total,
        sum_rate=rates.sum_rate,
        bit_rate_bps=rates.bit_rate(bandwidth),
        num_users=k,
        num_groups=g if rates.scheme in (Scheme.HRS, Scheme.HRS_OPT) else 0,
        snr_db=snr,
    )


def run_trial(
    spec: SweepSpec,
    scene: Scene,
    noise: NoiseParams,
    axis_index: int,
    trial: int,
) -> TrialOutcome:
    """
    Evaluate every requested scheme on one random placement.

    Any infeasibility skips the trial for all schemes so that the
    averages compare schemes on identical channels.
    """
    value = spec.values[axis_index]
    k = point_users(spec, value)
    g = point_groups(spec, k)
    seed = trial_seed(spec, axis_index, trial)
    try:
        placed = place_users_random(point_scene(spec, scene, value), k, seed)
        channel = build_channel(placed, noise)
        if spec.axis is SweepAxis.BEAM_WAIST_UM:
            power = spec.physical_power
            snr = physical_snr_db(channel, power)
        else:
            snr = value if spec.axis is SweepAxis.SNR_DB else spec.snr_db
            channel, power = normalize_channel(channel, snr)
        h, noise_var = channel.gains, channel.noise_var

        results: list[RateBreakdown] = []
        grouping = precoders = None
        for scheme in spec.schemes:
            if scheme is Scheme.OMA:
                results.append(oma_rates(h, power, noise_var))
            elif scheme is Scheme.RS:
                split = rs_split(power, spec.alpha, k)
                results.append(rs_rates(h, rs_precoders(h, spec.common_strategy), split, noise_var))
            else:
                if grouping is None:
                    grouping = kmeans_group(user_positions(placed), g, int(seed.generate_state(1)[0]))
                    precoders = hrs_precoders(h, grouping, spec.common_strategy)
                if scheme is Scheme.HRS:
                    split = hrs_split(power, spec.alpha, spec.beta, g, k)
                    results.append(hrs_rates(h, grouping, precoders, split, noise_var))
                else:
                    allocation, rates = optimize_hrs(
                        channel, grouping, precoders, power, spec.alpha, spec.beta, spec.optimizer
                    )
                    if not allocation.feasible:
                        raise InfeasibleError("optimized allocation misses the minimum sum rate", detail="r_min")
                    results.append(rates)
    except InfeasibleError as e:
        reason = f"{e.detail}: {e}" if e.detail else str(e)
        skipped = tuple(
            ResultRecord(
                scheme=scheme,
                axis=spec.axis,
                axis_value=value,
                trial=trial,
                num_users=k,
                num_groups=g if scheme in (Scheme.HRS, Scheme.HRS_OPT) else 0,
                skipped=True,
                reason=reason,
            )
            for scheme in spec.schemes
        )
        return TrialOutcome(axis_index=axis_index, trial=trial, records=skipped)
    records = tuple(_record(spec, value, trial, r, k, g, snr, noise.bandwidth) for r in results)
    return TrialOutcome(axis_index=axis_index, trial=trial, records=records)


class SweepEngine:
    """
    Runs one sweep point by point.

    Trials of a point are dispatched to a joblib pool; the aggregator
    receives them in trial order.
    """

    def __init__(
        self,
        spec: SweepSpec,
        scene: Scene,
        noise: NoiseParams,
        workers: int = 1,
        progress: Callable[[float, int, int], None] | None = None,
    ):
        """
        Initialize sweep engine.

        Args:
            spec: Sweep to run
            scene: Base scene (users are placed per trial)
            noise: Receiver noise parameters
            workers: Parallel trial workers
            progress: Called after each point with (axis value, feasible trials, trials)
        """
        self.spec = spec
        self.scene = scene
        self.noise = noise
        self.workers = workers
        self.progress = progress
        self.aggregator = ResultAggregator()

    def run_point(self, parallel: Parallel, axis_index: int) -> list[TrialOutcome]:
        """Run every trial of one axis value."""
        outcomes = parallel(
            delayed(run_trial)(self.spec, self.scene, self.noise, axis_index, trial)
            for trial in range(self.spec.trials)
        )
        return sorted(outcomes, key=lambda o: o.trial)

    def run(self) -> list[ResultRecord]:
        """
        Run the sweep.

        Returns:
            Per-trial and averaged records sorted by (scheme, axis_value, trial)
        """
        with Parallel(n_jobs=self.workers) as parallel:
            for axis_index, value in enumerate(self.spec.values):
                outcomes = self.run_point(parallel, axis_index)
                for outcome in outcomes:
                    self.aggregator.add(outcome.records)
                if self.progress is not None:
                    feasible = sum(1 for o in outcomes if not o.skipped)
                    self.progress(value, feasible, self.spec.trials)
        return self.aggregator.compute()


def run_sweep(spec: SweepSpec, scene: Scene, noise: NoiseParams | None = None, workers: int = 1) -> list[ResultRecord]:
    """Run a sweep and return its records."""
    return SweepEngine(spec, scene, noise or NoiseParams(), workers=workers).run()
