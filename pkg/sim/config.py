"""
YAML configuration loading.

A scene file describes the room, access points, VCSELs, receivers and
noise with flat keys; a settings file holds sweep and optimizer knobs.
Every key is optional and unknown keys are rejected.
"""

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import yaml

from .errors import ConfigError
from .geometry import DEFAULT_AP_POSITIONS, DEFAULT_M_SQUARED, DEFAULT_RING_TILT_DEG, DEFAULT_VCSEL_LAYOUT
from .models import (
    AccessPoint,
    CommonStrategy,
    NoiseParams,
    OptimizerSettings,
    Photodiode,
    Room,
    Scene,
    Scheme,
    SweepAxis,
    SweepSpec,
    VcselLayout,
    VcselParams,
)

SCENE_KEYS = frozenset(
    {
        "room_length",
        "room_width",
        "room_height",
        "rx_plane_height",
        "ap_positions",
        "vcsels_per_ap",
        "ap_beam_axes",
        "vcsel_layout",
        "ring_tilt_deg",
        "w0",
        "wavelength",
        "refractive_index",
        "m_squared",
        "mode_coeffs",
        "vcsel_power_w",
        "pd_azimuth_deg",
        "pd_elevation_deg",
        "pd_fov_deg",
        "pd_area_m2",
        "pd_responsivity",
        "noise_current_density",
        "bandwidth_hz",
        "include_shot_noise",
    }
)

SETTINGS_KEYS = frozenset(
    {
        "alpha",
        "beta",
        "groups",
        "trials",
        "seed",
        "snr_db",
        "common_placements",
        "workers",
        "physical_power",
        "common_strategy",
        "optimizer",
    }
)

OPTIMIZER_KEYS = frozenset({"tol", "max_outer", "max_inner", "p_min", "p_max", "r_min", "max_residual"})


def load_yaml(path: str | Path) -> dict:
    """Load a YAML mapping; an empty file gives an empty dict."""
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ConfigError(f"{path}: invalid YAML: {e}") from e
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return data


def config_hash(config: dict) -> str:
    """Generate hash of configuration for reproducibility."""
    config_str = json.dumps(config, sort_keys=True, default=str)
    return hashlib.sha256(config_str.encode()).hexdigest()[:8]


def _check_keys(config: dict, allowed: frozenset, where: str) -> None:
    unknown = sorted(set(config) - allowed)
    if unknown:
        raise ConfigError(f"unknown {where} keys: {', '.join(unknown)}")


def _vec3(value: Any, name: str) -> tuple[float, float, float]:
    try:
        x, y, z = (float(v) for v in value)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{name} entries must be [x, y, z] triples") from e
    return (x, y, z)


def _per_photodiode(config: dict, key: str, default: list[float], count: int) -> list[float]:
    values = config.get(key, default)
    if not isinstance(values, list):
        values = [values] * count
    if len(values) != count:
        raise ConfigError(f"{key} needs one entry per photodiode ({count})")
    return [float(v) for v in values]


def scene_from_config(config: dict) -> Scene:
    """
    Build a scene (without users) from a flat scene mapping.

    Missing keys take the reference deployment values.
    """
    _check_keys(config, SCENE_KEYS, "scene")
    try:
        room = Room(
            length=float(config.get("room_length", 5.0)),
            width=float(config.get("room_width", 5.0)),
            height=float(config.get("room_height", 3.0)),
            rx_plane_height=float(config.get("rx_plane_height", 0.85)),
        )
        positions = [_vec3(p, "ap_positions") for p in config.get("ap_positions", DEFAULT_AP_POSITIONS)]
        axes = config.get("ap_beam_axes")
        if axes is None:
            axes = [(0.0, 0.0, -1.0)] * len(positions)
        if len(axes) != len(positions):
            raise ConfigError("ap_beam_axes needs one entry per access point")
        count = int(config.get("vcsels_per_ap", 10))
        aps = tuple(
            AccessPoint(position=p, vcsels_per_ap=count, beam_axis=_vec3(a, "ap_beam_axes"))
            for p, a in zip(positions, axes)
        )
        modes = tuple(
            (int(p), int(l), float(a)) for p, l, a in config.get("mode_coeffs", [[0, 0, 1.0]])
        )
        vcsel = VcselParams(
            w0=float(config.get("w0", 20e-6)),
            wavelength=float(config.get("wavelength", 850e-9)),
            refractive_index=float(config.get("refractive_index", 1.0)),
            mode_coeffs=modes,
            total_optical_power=float(config.get("vcsel_power_w", 1.0)),
            m_squared=float(config.get("m_squared", DEFAULT_M_SQUARED)),
        )
        azimuths = [float(v) for v in config.get("pd_azimuth_deg", [0.0, 90.0, 180.0, 270.0])]
        n = len(azimuths)
        elevations = _per_photodiode(config, "pd_elevation_deg", [60.0] * n, n)
        fovs = _per_photodiode(config, "pd_fov_deg", [25.0] * n, n)
        adr = tuple(
            Photodiode(
                azimuth=az,
                elevation=el,
                fov_half_angle=fov,
                area=float(config.get("pd_area_m2", 20e-6)),
                responsivity=float(config.get("pd_responsivity", 0.4)),
            )
            for az, el, fov in zip(azimuths, elevations, fovs)
        )
        layout = VcselLayout(config.get("vcsel_layout", DEFAULT_VCSEL_LAYOUT.value))
        return Scene(
            room=room,
            aps=aps,
            vcsel=vcsel,
            adr=adr,
            vcsel_layout=layout,
            ring_tilt_deg=float(config.get("ring_tilt_deg", DEFAULT_RING_TILT_DEG)),
        )
    except (TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"invalid scene configuration: {e}") from e


def noise_from_config(config: dict) -> NoiseParams:
    """Receiver noise parameters from a scene mapping."""
    _check_keys(config, SCENE_KEYS, "scene")
    try:
        return NoiseParams(
            current_density=float(config.get("noise_current_density", 4.47e-12)),
            bandwidth=float(config.get("bandwidth_hz", 5e9)),
            include_shot=bool(config.get("include_shot_noise", False)),
        )
    except (TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"invalid noise configuration: {e}") from e


@dataclass(frozen=True)
class RunSettings:
    """
    Sweep and optimizer settings shared by every subcommand.

    Attributes:
        alpha, beta: Uniform split fractions
        groups: Fixed group count (None = per-point default)
        trials: Random placements per sweep point
        seed: Root seed
        snr_db: SNR of normalized runs when SNR is not the swept axis
        common_placements: Reuse placements across axis values (None = axis default)
        workers: Parallel trial workers
        physical_power: Precoder power budget in physical mode
        common_strategy: Common precoder construction
        optimizer: Settings of the power allocation
    """
    alpha: float = 0.8
    beta: float = 0.8
    groups: int | None = None
    trials: int = 50
    seed: int = 42
    snr_db: float = 15.0
    common_placements: bool | None = None
    workers: int = 1
    physical_power: float = 1.0
    common_strategy: CommonStrategy = CommonStrategy.EQUAL_GAIN
    optimizer: OptimizerSettings = field(default_factory=OptimizerSettings)

    def __post_init__(self) -> None:
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    def sweep_spec(
        self,
        axis: SweepAxis,
        values,
        schemes: tuple[Scheme, ...] | None = None,
        num_users: int = 4,
    ) -> SweepSpec:
        """Combine these settings with a sweep axis into a SweepSpec."""
        kwargs = {} if schemes is None else {"schemes": tuple(schemes)}
        return SweepSpec(
            axis=axis,
            values=tuple(float(v) for v in values),
            trials=self.trials,
            seed=self.seed,
            num_users=num_users,
            groups=self.groups,
            alpha=self.alpha,
            beta=self.beta,
            snr_db=self.snr_db,
            physical_power=self.physical_power,
            common_placements=self.common_placements,
            common_strategy=self.common_strategy,
            optimizer=self.optimizer,
            **kwargs,
        )


def settings_from_config(config: dict) -> RunSettings:
    """Build RunSettings from a settings mapping."""
    _check_keys(config, SETTINGS_KEYS, "settings")
    opt = config.get("optimizer") or {}
    if not isinstance(opt, dict):
        raise ConfigError("optimizer must be a mapping")
    _check_keys(opt, OPTIMIZER_KEYS, "optimizer")
    try:
        optimizer = OptimizerSettings(
            tol=float(opt.get("tol", 1e-6)),
            max_outer=int(opt.get("max_outer", 50)),
            max_inner=int(opt.get("max_inner", 500)),
            p_min=float(opt.get("p_min", 0.0)),
            p_max=None if opt.get("p_max") is None else float(opt["p_max"]),
            r_min=float(opt.get("r_min", 0.0)),
            max_residual=float(opt.get("max_residual", 1e-9)),
        )
        groups = config.get("groups")
        placements = config.get("common_placements")
        return RunSettings(
            alpha=float(config.get("alpha", 0.8)),
            beta=float(config.get("beta", 0.8)),
            groups=None if groups is None else int(groups),
            trials=int(config.get("trials", 50)),
            seed=int(config.get("seed", 42)),
            snr_db=float(config.get("snr_db", 15.0)),
            common_placements=None if placements is None else bool(placements),
            workers=int(config.get("workers", 1)),
            physical_power=float(config.get("physical_power", 1.0)),
            common_strategy=CommonStrategy(config.get("common_strategy", CommonStrategy.EQUAL_GAIN.value)),
            optimizer=optimizer,
        )
    except (TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(f"invalid settings: {e}") from e


def override(settings: RunSettings, **values) -> RunSettings:
    """Copy of the settings with every non-None value replaced."""
    return replace(settings, **{k: v for k, v in values.items() if v is not None})
