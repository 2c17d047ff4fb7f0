"""Laser OWC rate-splitting simulation package."""

from .channel import build_channel, normalize_channel
from .config import RunSettings, load_yaml, noise_from_config, scene_from_config, settings_from_config
from .engine import SweepEngine, run_sweep
from .errors import ConfigError, InfeasibleError, OutOfRangeError, OwcError
from .geometry import default_scene, place_users_random
from .kpi import ResultAggregator, emit_csv
from .models import (
    ChannelMatrix,
    Grouping,
    NoiseParams,
    OptimizerSettings,
    PowerAllocation,
    RateBreakdown,
    ResultRecord,
    Scene,
    Scheme,
    SweepAxis,
    SweepSpec,
)
from .optimizer import optimize_hrs

__all__ = [
    "SweepEngine",
    "ResultAggregator",
    "RunSettings",
    "run_sweep",
    "emit_csv",
    "optimize_hrs",
    "build_channel",
    "normalize_channel",
    "default_scene",
    "place_users_random",
    "load_yaml",
    "scene_from_config",
    "noise_from_config",
    "settings_from_config",
    "ChannelMatrix",
    "Grouping",
    "NoiseParams",
    "OptimizerSettings",
    "PowerAllocation",
    "RateBreakdown",
    "ResultRecord",
    "Scene",
    "Scheme",
    "SweepAxis",
    "SweepSpec",
    "OwcError",
    "ConfigError",
    "InfeasibleError",
    "OutOfRangeError",
]
