"""
Hierarchical rate splitting.

K-means user grouping, the uniform HRS power split and the outer-common,
inner-common and private SINRs and rates. Each user removes the outer
common stream, then its group's inner common stream, then decodes its
private stream.
"""

import math
from dataclasses import dataclass

import numpy as np
import pandas as pd
from sklearn.cluster import KMeans

from .errors import ConfigError
from .geometry import default_scene, with_users
from .models import Grouping, HrsPowerSplit, PrecoderSet, RateBreakdown, Scene, Scheme

KMEANS_MAX_ITER = 100


@dataclass(frozen=True, eq=False)
class HrsSinrs:
    """Per-user SINRs of the outer common, inner common and private streams."""
    outer_common: np.ndarray
    inner_common: np.ndarray
    private: np.ndarray


def default_groups(k: int) -> int:
    """Group count used when none is configured."""
    if k < 1:
        raise ConfigError("number of users must be >= 1")
    return min(k, 2) if k <= 8 else math.ceil(k / 4)


def _fill_empty_clusters(xy: np.ndarray, labels: np.ndarray, num_groups: int) -> np.ndarray:
    """
    Move the point farthest from its centroid into each empty cluster.

    Only clusters with more than one member give up a point; ties go to the
    lowest user index.
    """
    labels = labels.copy()
    for empty in np.setdiff1d(np.arange(num_groups), labels):
        sizes = np.bincount(labels, minlength=num_groups)
        centroids = np.array([xy[labels == g].mean(axis=0) if sizes[g] else np.zeros(2) for g in range(num_groups)])
        distance = np.linalg.norm(xy - centroids[labels], axis=1)
        distance[sizes[labels] < 2] = -1.0
        labels[int(np.argmax(distance))] = empty
    return labels


def kmeans_group(positions, num_groups: int, seed: int) -> Grouping:
    """
    Group users by K-means on their floor-plane coordinates.

    Args:
        positions: K x 2 (or K x 3) user positions; only x and y are used
        num_groups: Number of groups G, 1 <= G <= K
        seed: Seed of the k-means++ initialization

    Returns:
        Grouping with labels renumbered in order of first appearance
    """
    xy = np.asarray(positions, dtype=float)[:, :2]
    k = xy.shape[0]
    if not 1 <= num_groups <= k:
        raise ConfigError(f"need 1 <= G <= K, got G={num_groups}, K={k}")
    if num_groups == 1:
        labels = np.zeros(k, dtype=int)
    else:
        model = KMeans(
            n_clusters=num_groups,
            init="k-means++",
            n_init=1,
            max_iter=KMEANS_MAX_ITER,
            tol=0.0,
            random_state=seed,
        )
        labels = model.fit_predict(xy)
    labels = _fill_empty_clusters(xy, np.asarray(labels, dtype=int), num_groups)
    _, first = np.unique(labels, return_index=True)
    order = labels[np.sort(first)]
    relabel = np.empty(num_groups, dtype=int)
    relabel[order] = np.arange(num_groups)
    assignments = relabel[labels]
    centroids = np.array([xy[assignments == g].mean(axis=0) for g in range(num_groups)])
    return Grouping(assignments=assignments, centroids=centroids)


def hrs_split(total_power: float, alpha: float, beta: float, num_groups: int, k: int) -> HrsPowerSplit:
    """
    Uniform HRS split.

    P_oc = P (1 - beta), P_ic,g = P beta (1 - alpha) / G, P_gk = P beta alpha / K.
    Private power is divided by the total user count K, not the group size.
    """
    for name, value in (("alpha", alpha), ("beta", beta)):
        if not 0 < value <= 1:
            raise ConfigError(f"{name} must lie in (0, 1], got {value}")
    if not 1 <= num_groups <= k:
        raise ConfigError(f"need 1 <= G <= K, got G={num_groups}, K={k}")
    if total_power <= 0:
        raise ConfigError("total power must be positive")
    return HrsPowerSplit(
        total_power=total_power,
        alpha=alpha,
        beta=beta,
        p_outer_common=total_power * (1.0 - beta),
        p_inner_common=(total_power * beta * (1.0 - alpha) / num_groups,) * num_groups,
        p_private=(total_power * beta * alpha / k,) * k,
    )


def hrs_sinrs(
    h: np.ndarray,
    grouping: Grouping,
    precoders: PrecoderSet,
    split: HrsPowerSplit,
    noise_var: np.ndarray,
) -> HrsSinrs:
    """
    Evaluate the outer-common, inner-common and private SINRs of every user.

    Inter-group terms are computed in full even though block
    diagonalization drives them to ~0. The private denominator is the full
    private sum minus the user's own term.
    """
    h = np.atleast_2d(np.asarray(h, dtype=float))
    if precoders.outer is None:
        raise ConfigError("HRS SINRs need outer precoders")
    k_total = h.shape[0]
    g_total = grouping.num_groups
    p_private = np.asarray(split.p_private)
    p_ic = np.asarray(split.p_inner_common)
    ic_dirs = np.column_stack([precoders.inner_common_composite(l) for l in range(g_total)])
    oc = np.empty(k_total)
    ic = np.empty(k_total)
    priv = np.empty(k_total)
    for k in range(k_total):
        g = int(grouping.assignments[k])
        private_terms = p_private * (h[k] @ precoders.private) ** 2
        ic_terms = p_ic * (h[k] @ ic_dirs) ** 2
        all_private = float(private_terms.sum())
        other_ic = float(ic_terms.sum() - ic_terms[g])
        sigma2 = float(noise_var[k])
        own = float(private_terms[k])  # Lambda
        oc[k] = split.p_outer_common * float(h[k] @ precoders.common) ** 2 / (
            all_private + float(ic_terms.sum()) + sigma2
        )
        ic[k] = float(ic_terms[g]) / (all_private + other_ic + sigma2)
        priv[k] = own / (all_private - own + other_ic + sigma2)
    return HrsSinrs(outer_common=oc, inner_common=ic, private=priv)


def hrs_rates(
    h: np.ndarray,
    grouping: Grouping,
    precoders: PrecoderSet,
    split: HrsPowerSplit,
    noise_var: np.ndarray,
) -> RateBreakdown:
    """
    HRS rate breakdown.

    The outer common rate uses the minimum SINR over all users, each inner
    common rate the minimum over its group.
    """
    sinrs = hrs_sinrs(h, grouping, precoders, split, noise_var)
    r_ic = tuple(
        math.log2(1.0 + float(sinrs.inner_common[grouping.members(g)].min()))
        for g in range(grouping.num_groups)
    )
    return RateBreakdown(
        scheme=Scheme.HRS,
        r_outer_common=math.log2(1.0 + float(sinrs.outer_common.min())),
        r_inner_common=r_ic,
        r_private=tuple(math.log2(1.0 + float(g)) for g in sinrs.private),
    )


def grouping_to_frame(grouping: Grouping) -> pd.DataFrame:
    """One row per user: user_index, group_index and the group centroid."""
    return pd.DataFrame(
        {
            "user_index": np.arange(grouping.num_users),
            "group_index": grouping.assignments,
            "centroid_x": grouping.centroids[grouping.assignments, 0],
            "centroid_y": grouping.centroids[grouping.assignments, 1],
        }
    )


def two_group_example() -> Scene:
    """Two groups of two users in opposite corners of the default room."""
    positions = [(1.0, 1.0), (1.6, 0.8), (4.0, 3.6), (3.4, 4.1)]
    return with_users(default_scene(), positions)
