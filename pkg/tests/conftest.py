"""Shared fixtures."""

from dataclasses import replace

import numpy as np
import pytest

from sim.geometry import default_scene, place_users_random
from sim.models import VcselLayout


@pytest.fixture
def scene():
    return default_scene()


@pytest.fixture
def colocated_scene():
    """Default scene with one transmit element per AP."""
    return replace(default_scene(), vcsel_layout=VcselLayout.COLOCATED, ring_tilt_deg=0.0)


@pytest.fixture
def placed_scene(colocated_scene):
    return place_users_random(colocated_scene, 4, 42)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def random_gains(rng):
    """Factory of strictly positive K x L gain matrices."""

    def make(k: int, l: int) -> np.ndarray:
        return np.abs(rng.normal(size=(k, l))) + 0.1

    return make
