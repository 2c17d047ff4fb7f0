import math

import numpy as np
import pytest

from sim.channel import build_channel, normalize_channel
from sim.errors import ConfigError
from sim.hrs import (
    default_groups,
    grouping_to_frame,
    hrs_rates,
    hrs_sinrs,
    hrs_split,
    kmeans_group,
    two_group_example,
)
from sim.models import NoiseParams, Scheme
from sim.precoding import hrs_precoders, rs_precoders
from sim.ratesplit import rs_rates, rs_split
from tests.helpers import grouping_of


@pytest.mark.parametrize(("k", "g"), [(1, 1), (2, 2), (4, 2), (8, 2), (9, 3), (12, 3)])
def test_default_groups(k, g):
    assert default_groups(k) == g


def test_default_groups_rejects_zero():
    with pytest.raises(ConfigError):
        default_groups(0)


def test_kmeans_one_group_per_user(rng):
    positions = rng.uniform(0.0, 5.0, size=(5, 2))
    grouping = kmeans_group(positions, 5, 7)
    np.testing.assert_array_equal(grouping.assignments, np.arange(5))
    np.testing.assert_allclose(grouping.centroids, positions)


def test_kmeans_single_group(rng):
    positions = rng.uniform(0.0, 5.0, size=(6, 2))
    grouping = kmeans_group(positions, 1, 7)
    np.testing.assert_array_equal(grouping.assignments, np.zeros(6))
    np.testing.assert_allclose(grouping.centroids[0], positions.mean(axis=0))


def test_kmeans_planted_clouds(rng):
    a = rng.normal([1.0, 1.0], 0.1, size=(4, 2))
    b = rng.normal([4.0, 4.0], 0.1, size=(4, 2))
    positions = np.vstack([a, b])[[0, 4, 1, 5, 2, 6, 3, 7]]
    grouping = kmeans_group(positions, 2, 3)
    np.testing.assert_array_equal(grouping.assignments, [0, 1, 0, 1, 0, 1, 0, 1])
    np.testing.assert_allclose(grouping.centroids[0], a.mean(axis=0))


def test_kmeans_uses_floor_coordinates(rng):
    xy = rng.uniform(0.0, 5.0, size=(6, 2))
    xyz = np.column_stack([xy, np.full(6, 0.85)])
    np.testing.assert_array_equal(kmeans_group(xyz, 2, 11).assignments, kmeans_group(xy, 2, 11).assignments)


def test_kmeans_rejects_too_many_groups(rng):
    with pytest.raises(ConfigError):
        kmeans_group(rng.uniform(size=(3, 2)), 4, 1)


def test_kmeans_repairs_empty_clusters():
    positions = np.array([[1.0, 1.0], [1.0, 1.0], [1.0, 1.0], [4.0, 4.0]])
    grouping = kmeans_group(positions, 3, 5)
    assert sorted(np.bincount(grouping.assignments)) == [1, 1, 2]
    assert grouping.assignments[0] == 0
    assert grouping.centroids.shape == (3, 2)


def test_kmeans_coincident_users_fill_every_group():
    grouping = kmeans_group(np.full((4, 2), 2.5), 4, 0)
    np.testing.assert_array_equal(grouping.assignments, np.arange(4))
    np.testing.assert_allclose(grouping.centroids, np.full((4, 2), 2.5))


def test_kmeans_is_deterministic(rng):
    positions = rng.uniform(0.0, 5.0, size=(12, 2))
    a = kmeans_group(positions, 3, 42)
    b = kmeans_group(positions, 3, 42)
    np.testing.assert_array_equal(a.assignments, b.assignments)
    assert a.assignments[0] == 0


def test_hrs_split_example():
    split = hrs_split(12.0, 0.5, 0.5, 2, 4)
    assert split.p_outer_common == pytest.approx(6.0)
    assert split.p_inner_common == pytest.approx((1.5, 1.5))
    assert split.p_private == pytest.approx((0.75,) * 4)


def test_hrs_split_no_outer_common():
    assert hrs_split(12.0, 0.5, 1.0, 2, 4).p_outer_common == 0.0


def test_hrs_split_sums_to_budget(rng):
    for _ in range(1000):
        total = float(rng.uniform(0.01, 1e4))
        alpha, beta = rng.uniform(1e-3, 1.0, size=2)
        k = int(rng.integers(1, 41))
        g = int(rng.integers(1, k + 1))
        split = hrs_split(total, float(alpha), float(beta), g, k)
        assert split.total == pytest.approx(total, rel=1e-12)
        assert split.p_outer_common + math.fsum(split.p_inner_common) + math.fsum(split.p_private) == pytest.approx(
            total, rel=1e-12
        )
        assert len(split.p_inner_common) == g
        assert len(split.p_private) == k


@pytest.mark.parametrize(("alpha", "beta", "g", "k"), [(0.0, 0.5, 1, 2), (0.5, 1.2, 1, 2), (0.5, 0.5, 3, 2)])
def test_hrs_split_validation(alpha, beta, g, k):
    with pytest.raises(ConfigError):
        hrs_split(10.0, alpha, beta, g, k)


def test_single_group_without_outer_reduces_to_rs():
    one_group = grouping_of([0, 0, 0, 0])
    noise = np.ones(4)
    for seed in range(100):
        h = np.abs(np.random.default_rng(seed).normal(size=(4, 4))) + 0.1
        hrs = hrs_rates(h, one_group, hrs_precoders(h, one_group), hrs_split(10.0, 0.8, 1.0, 1, 4), noise)
        rs = rs_rates(h, rs_precoders(h), rs_split(10.0, 0.8, 4), noise)
        assert hrs.r_outer_common == 0.0
        assert hrs.sum_rate == pytest.approx(rs.sum_rate, abs=1e-12), seed
        assert hrs.r_private == pytest.approx(rs.r_private, abs=1e-12), seed


def test_sinrs_match_scalar_formulas(random_gains):
    h = random_gains(4, 4)
    grouping = grouping_of([0, 0, 1, 1])
    pre = hrs_precoders(h, grouping)
    split = hrs_split(10.0, 0.7, 0.6, 2, 4)
    noise = np.array([1.0, 0.5, 2.0, 1.5])
    sinrs = hrs_sinrs(h, grouping, pre, split, noise)
    ic_dirs = [pre.inner_common_composite(g) for g in range(2)]
    for k in range(4):
        g = grouping.assignments[k]
        private = [split.p_private[j] * float(h[k] @ pre.private[:, j]) ** 2 for j in range(4)]
        inner = [split.p_inner_common[l] * float(h[k] @ ic_dirs[l]) ** 2 for l in range(2)]
        other_inner = sum(inner[l] for l in range(2) if l != g)
        oc = split.p_outer_common * float(h[k] @ pre.common) ** 2 / (sum(private) + sum(inner) + noise[k])
        ic = inner[g] / (sum(private) + other_inner + noise[k])
        own = private[k] / (sum(private[j] for j in range(4) if j != k) + other_inner + noise[k])
        assert sinrs.outer_common[k] == pytest.approx(oc, rel=1e-12)
        assert sinrs.inner_common[k] == pytest.approx(ic, rel=1e-12)
        assert sinrs.private[k] == pytest.approx(own, rel=1e-12)


def test_common_rates_are_decodable_by_every_member(random_gains):
    h = random_gains(4, 4)
    grouping = grouping_of([0, 1, 1, 0])
    pre = hrs_precoders(h, grouping)
    split = hrs_split(30.0, 0.8, 0.8, 2, 4)
    sinrs = hrs_sinrs(h, grouping, pre, split, np.ones(4))
    rates = hrs_rates(h, grouping, pre, split, np.ones(4))
    assert rates.scheme is Scheme.HRS
    for k in range(4):
        assert rates.r_outer_common <= math.log2(1.0 + sinrs.outer_common[k]) + 1e-12
        g = grouping.assignments[k]
        assert rates.r_inner_common[g] <= math.log2(1.0 + sinrs.inner_common[k]) + 1e-12


def test_two_group_example_rates():
    scene = two_group_example()
    assert scene.num_users == 4
    channel, power = normalize_channel(build_channel(scene, NoiseParams()), 15.0)
    grouping = kmeans_group([u.position for u in scene.users], 2, 42)
    np.testing.assert_array_equal(grouping.assignments, [0, 0, 1, 1])
    rates = hrs_rates(
        channel.gains,
        grouping,
        hrs_precoders(channel.gains, grouping),
        hrs_split(power, 0.8, 0.8, 2, 4),
        channel.noise_var,
    )
    assert len(rates.r_inner_common) == 2
    assert len(rates.r_private) == 4
    assert rates.sum_rate > 0.0


def test_grouping_frame():
    df = grouping_to_frame(grouping_of([0, 1, 1]))
    assert list(df.columns) == ["user_index", "group_index", "centroid_x", "centroid_y"]
    assert df["group_index"].tolist() == [0, 1, 1]
