import math
from dataclasses import replace

import numpy as np
import pytest

from sim.beam import power_on_aperture
from sim.channel import (
    build_channel,
    channel_to_frame,
    link_gain,
    normalize_channel,
    physical_snr_db,
)
from sim.errors import ConfigError, InfeasibleError
from sim.geometry import default_adr, incidence_angle, with_users
from sim.models import ChannelMatrix, ChannelMode, NoiseParams, Photodiode


@pytest.fixture
def scene(colocated_scene):
    return colocated_scene


def _single_pd(scene, pd: Photodiode, positions):
    return with_users(replace(scene, adr=(pd,)), positions)


def test_thermal_noise_value():
    noise = NoiseParams()
    assert noise.thermal_variance == pytest.approx(9.99e-14, rel=1e-3)
    assert noise.thermal_variance == pytest.approx(4.47e-12**2 * 5e9, rel=1e-15)


def test_link_gain_upward_photodiode_under_ap(scene):
    up = Photodiode(azimuth=0.0, elevation=90.0, fov_half_angle=25.0)
    placed = _single_pd(scene, up, [(3.5, 3.5)])
    expected = 0.4 * power_on_aperture(scene.vcsel, 2.15, 0.0, 20e-6, 0.0)
    assert link_gain(placed, 0, 0) == pytest.approx(expected, rel=1e-12)


def test_tilted_faces_miss_overhead_ap(scene):
    # every face sees the overhead AP at 30 degrees, outside the 25 degree FoV
    placed = with_users(scene, [(3.5, 3.5)])
    assert link_gain(placed, 0, 0) == 0.0


def test_far_user_outside_every_fov(scene):
    placed = with_users(scene, [(0.0, 0.0)])
    assert link_gain(placed, 0, 0) == 0.0


def test_invalid_link_rejected(placed_scene):
    with pytest.raises(ConfigError):
        link_gain(placed_scene, 4, 0)
    with pytest.raises(ConfigError):
        link_gain(placed_scene, 0, 4)


def test_fov_boundary_is_inside(scene):
    pd = Photodiode(azimuth=0.0, elevation=60.0, fov_half_angle=25.0)
    user = (2.5, 3.5, 0.85)
    theta = incidence_angle(pd, user, scene.aps[0].position)
    inside = _single_pd(scene, replace(pd, fov_half_angle=theta), [user[:2]])
    wider = _single_pd(scene, replace(pd, fov_half_angle=theta + 1e-6), [user[:2]])
    narrower = _single_pd(scene, replace(pd, fov_half_angle=theta - 1e-6), [user[:2]])
    assert link_gain(inside, 0, 0) > 0.0
    assert link_gain(wider, 0, 0) == link_gain(inside, 0, 0)
    assert link_gain(narrower, 0, 0) == 0.0


def test_build_channel_shape_and_sign(placed_scene):
    channel = build_channel(placed_scene, NoiseParams())
    assert channel.gains.shape == (4, 4)
    assert channel.mode is ChannelMode.PHYSICAL
    assert np.all(channel.gains >= 0.0)
    np.testing.assert_allclose(channel.noise_var, NoiseParams().thermal_variance, rtol=1e-15)


def test_build_channel_counts_vcsels(placed_scene):
    channel = build_channel(placed_scene, NoiseParams())
    for k in range(4):
        for l in range(4):
            assert channel.gains[k, l] == pytest.approx(10 * link_gain(placed_scene, k, l), rel=1e-12)


def test_build_channel_without_users_rejected(scene):
    with pytest.raises(ConfigError):
        build_channel(scene, NoiseParams())


def test_doubling_area_doubles_gains(scene):
    positions = [(1.0, 1.0), (2.2, 3.1), (4.0, 2.0)]
    base = build_channel(with_users(scene, positions), NoiseParams())
    big = build_channel(with_users(replace(scene, adr=default_adr(area=40e-6)), positions), NoiseParams())
    np.testing.assert_allclose(big.gains, 2.0 * base.gains, rtol=1e-12)


def test_power_scale_covariance(placed_scene):
    brighter = replace(placed_scene, vcsel=replace(placed_scene.vcsel, total_optical_power=3.0))
    base = build_channel(placed_scene, NoiseParams())
    scaled = build_channel(brighter, NoiseParams())
    np.testing.assert_allclose(scaled.gains, 3.0 * base.gains, rtol=1e-12)
    if not base.uncovered:
        a, _ = normalize_channel(base, 10.0)
        b, _ = normalize_channel(scaled, 10.0)
        np.testing.assert_allclose(a.gains, b.gains, atol=1e-12)


def test_shot_noise_adds_to_thermal(placed_scene):
    thermal = build_channel(placed_scene, NoiseParams())
    shot = build_channel(placed_scene, NoiseParams(include_shot=True))
    expected = thermal.noise_var + 2.0 * 1.602176634e-19 * thermal.gains.sum(axis=1) * 5e9
    np.testing.assert_allclose(shot.noise_var, expected, rtol=1e-12)


def test_uncovered_user_reported(scene):
    channel = build_channel(with_users(scene, [(0.0, 0.0), (1.0, 1.0)]), NoiseParams())
    assert channel.uncovered == (0,)
    assert np.any(channel.gains[1] > 0)


def test_normalize_power_values():
    channel = ChannelMatrix(gains=np.array([[3.0, 4.0], [1.0, 0.0]]), noise_var=np.full(2, 1e-13))
    _, p0 = normalize_channel(channel, 0.0)
    assert p0 == 1.0
    normalized, p15 = normalize_channel(channel, 15.0)
    assert p15 == pytest.approx(31.623, rel=1e-4)
    np.testing.assert_allclose(np.linalg.norm(normalized.gains, axis=1), 1.0, atol=1e-12)
    np.testing.assert_array_equal(normalized.noise_var, [1.0, 1.0])
    assert normalized.mode is ChannelMode.NORMALIZED


def test_normalize_rejects_uncovered_user():
    channel = ChannelMatrix(gains=np.array([[1.0, 0.0], [0.0, 0.0]]), noise_var=np.ones(2))
    with pytest.raises(InfeasibleError) as err:
        normalize_channel(channel, 10.0)
    assert err.value.detail == "coverage"
    assert "user 1" in str(err.value)


def test_physical_snr(placed_scene):
    channel = build_channel(placed_scene, NoiseParams())
    snr = np.sum(channel.gains**2, axis=1) / channel.noise_var
    assert physical_snr_db(channel) == pytest.approx(10.0 * math.log10(snr.mean()), rel=1e-12)
    assert physical_snr_db(channel, 2.0) == pytest.approx(physical_snr_db(channel) + 10.0 * math.log10(2.0))


def test_channel_frame(placed_scene):
    channel = build_channel(placed_scene, NoiseParams())
    df = channel_to_frame(channel)
    assert list(df.columns) == ["ap_1", "ap_2", "ap_3", "ap_4", "noise_var"]
    assert len(df) == 4
    np.testing.assert_array_equal(df[["ap_1", "ap_2", "ap_3", "ap_4"]].to_numpy(), channel.gains)
