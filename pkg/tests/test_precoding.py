import math

import numpy as np
import pytest

from sim.errors import InfeasibleError
from sim.models import CommonStrategy
from sim.precoding import (
    common_precoder,
    hrs_precoders,
    inner_precoders,
    outer_precoders,
    outer_residual,
    rs_precoders,
    zf_precoder,
    zf_residual,
)
from tests.helpers import grouping_of


def test_zf_identity():
    np.testing.assert_allclose(zf_precoder(np.eye(3)), np.eye(3), atol=1e-15)


def test_zf_triangular_example():
    w = zf_precoder(np.array([[1.0, 0.0], [1.0, 1.0]]))
    s = 1.0 / math.sqrt(2.0)
    np.testing.assert_allclose(w[:, 0], [s, -s], atol=1e-12)
    np.testing.assert_allclose(w[:, 1], [0.0, 1.0], atol=1e-12)


def test_zf_random_draws(random_gains):
    for _ in range(100):
        h = random_gains(3, 4)
        w = zf_precoder(h)
        assert w.shape == (4, 3)
        np.testing.assert_allclose(np.linalg.norm(w, axis=0), 1.0, atol=1e-12)
        assert zf_residual(h, w) <= 1e-9
        assert np.all(np.diag(h @ w) > 0)


def test_zf_more_users_than_transmitters(random_gains):
    with pytest.raises(InfeasibleError) as err:
        zf_precoder(random_gains(5, 4))
    assert err.value.detail == "K>L"


def test_zf_rank_deficient():
    with pytest.raises(InfeasibleError) as err:
        zf_precoder(np.array([[1.0, 2.0, 3.0], [1.0, 2.0, 3.0]]))
    assert err.value.detail == "rank"


def test_zf_scale_invariant(random_gains):
    h = random_gains(3, 4)
    np.testing.assert_allclose(zf_precoder(7.5 * h), zf_precoder(h), atol=1e-12)


def test_common_single_row():
    np.testing.assert_allclose(common_precoder(np.array([[3.0, 4.0]])), [0.6, 0.8], atol=1e-15)


def test_common_identical_rows():
    h = np.array([[1.0, 2.0, 2.0], [1.0, 2.0, 2.0]])
    np.testing.assert_allclose(common_precoder(h), h[0] / 3.0, atol=1e-15)


def test_common_orthogonal_rows():
    s = 1.0 / math.sqrt(2.0)
    np.testing.assert_allclose(common_precoder(np.eye(2)), [s, s], atol=1e-15)


def test_common_zero_channel():
    with pytest.raises(InfeasibleError):
        common_precoder(np.zeros((2, 3)))


def test_common_ignores_row_scale():
    h = np.array([[1.0, 0.0], [0.0, 1.0]])
    scaled = np.array([[100.0, 0.0], [0.0, 0.01]])
    np.testing.assert_allclose(common_precoder(scaled), common_precoder(h), atol=1e-15)


def test_common_dominant_strategy(random_gains):
    h = random_gains(3, 4)
    w = common_precoder(h, CommonStrategy.DOMINANT)
    assert np.linalg.norm(w) == pytest.approx(1.0)
    assert w.sum() >= 0.0
    _, s, _ = np.linalg.svd(h)
    assert np.linalg.norm(h @ w) == pytest.approx(s[0], rel=1e-12)


def test_rs_precoders(random_gains):
    h = random_gains(4, 4)
    pre = rs_precoders(h)
    np.testing.assert_allclose(pre.private, zf_precoder(h))
    np.testing.assert_allclose(pre.common, common_precoder(h))
    assert pre.outer is None


def test_outer_single_group(random_gains):
    h = random_gains(4, 4)
    (basis,) = outer_precoders(h, grouping_of([0, 0, 0, 0]))
    np.testing.assert_array_equal(basis, np.eye(4))


def test_outer_two_groups(random_gains):
    h = random_gains(4, 4)
    grouping = grouping_of([0, 0, 1, 1])
    outer = outer_precoders(h, grouping)
    for basis in outer:
        assert basis.shape == (4, 2)
        np.testing.assert_allclose(basis.T @ basis, np.eye(2), atol=1e-12)
    assert outer_residual(h, grouping, outer) <= 1e-10


def test_outer_out_of_dimensions(random_gains):
    h = random_gains(6, 4)
    with pytest.raises(InfeasibleError) as err:
        outer_precoders(h, grouping_of([0, 0, 1, 1, 2, 2]))
    assert err.value.detail == "outer"


def test_hrs_single_group_is_zf(random_gains):
    h = random_gains(4, 4)
    pre = hrs_precoders(h, grouping_of([0, 0, 0, 0]))
    np.testing.assert_allclose(pre.private, zf_precoder(h), atol=1e-12)
    np.testing.assert_allclose(pre.inner_common_composite(0), common_precoder(h), atol=1e-12)


def test_hrs_singleton_group_matched_filter(random_gains):
    h = random_gains(3, 4)
    grouping = grouping_of([0, 0, 1])
    pre = hrs_precoders(h, grouping)
    basis = pre.outer[1]
    projected = basis @ basis.T @ h[2]
    np.testing.assert_allclose(pre.private[:, 2], projected / np.linalg.norm(projected), atol=1e-12)


def test_hrs_precoders_null_leakage(random_gains):
    h = random_gains(4, 4)
    grouping = grouping_of([0, 1, 0, 1])
    pre = hrs_precoders(h, grouping)
    assert pre.private.shape == (4, 4)
    np.testing.assert_allclose(np.linalg.norm(pre.private, axis=0), 1.0, atol=1e-12)
    assert zf_residual(h, pre.private) <= 1e-9
    for g in range(2):
        ic = pre.inner_common_composite(g)
        assert np.linalg.norm(ic) == pytest.approx(1.0)
        others = h[grouping.assignments != g]
        assert np.max(np.abs(others @ ic)) <= 1e-9 * np.max(np.linalg.norm(others, axis=1))
    assert np.linalg.norm(pre.common) == pytest.approx(1.0)


def test_inner_precoders_on_effective_channels(random_gains):
    h = random_gains(4, 4)
    grouping = grouping_of([0, 0, 1, 1])
    outer = outer_precoders(h, grouping)
    private, common = inner_precoders(h, grouping, outer)
    assert len(private) == len(common) == 2
    for g, basis in enumerate(outer):
        effective = h[grouping.members(g)] @ basis
        assert private[g].shape == (2, 2)
        assert common[g].shape == (2,)
        assert zf_residual(effective, private[g]) <= 1e-9
        assert np.linalg.norm(common[g]) == pytest.approx(1.0)
