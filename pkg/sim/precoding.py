"""
Zero-forcing, common and block-diagonal (outer) precoders.

All precoders are real and every emitted column has unit norm; power
accounting lives entirely in the split or allocation that uses them.
"""

import numpy as np
from scipy.linalg import null_space

from .errors import InfeasibleError
from .models import CommonStrategy, Grouping, PrecoderSet

# Relative singular-value tolerance of every rank decision
RANK_TOL = 1e-10


def zf_precoder(h: np.ndarray) -> np.ndarray:
    """
    Zero-forcing precoder from the right pseudo-inverse of H.

    Args:
        h: K x L channel matrix

    Returns:
        L x K matrix with unit-norm columns, h_j . w_k = 0 for j != k
    """
    h = np.atleast_2d(np.asarray(h, dtype=float))
    k, l = h.shape
    if k > l:
        raise InfeasibleError(
            f"zero forcing needs K <= L, got K={k} users for L={l} transmit dimensions",
            detail="K>L",
        )
    u, s, vt = np.linalg.svd(h, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        raise InfeasibleError("zero forcing on an all-zero channel", detail="rank")
    rank = int(np.sum(s > RANK_TOL * s[0]))
    if rank < k:
        raise InfeasibleError(
            f"channel rank {rank} is below the number of users K={k}",
            detail="rank",
        )
    w = vt.T @ np.diag(1.0 / s) @ u.T
    return w / np.linalg.norm(w, axis=0, keepdims=True)


def common_precoder(h: np.ndarray, strategy: CommonStrategy = CommonStrategy.EQUAL_GAIN) -> np.ndarray:
    """
    Unit-norm common-message precoder.

    EQUAL_GAIN: normalized sum of the unit-normalized channel rows.
    DOMINANT: dominant right singular vector, sign chosen so its entries sum >= 0.
    """
    h = np.atleast_2d(np.asarray(h, dtype=float))
    norms = np.linalg.norm(h, axis=1)
    if not np.any(norms > 0):
        raise InfeasibleError("common precoder of an all-zero channel", detail="rank")
    if strategy is CommonStrategy.DOMINANT:
        _, _, vt = np.linalg.svd(h, full_matrices=False)
        v = vt[0]
        return v if v.sum() >= 0 else -v
    rows = h[norms > 0] / norms[norms > 0, None]
    w = rows.sum(axis=0)
    n = float(np.linalg.norm(w))
    if n <= RANK_TOL * rows.shape[0]:
        raise InfeasibleError("normalized channel rows cancel out", detail="common")
    return w / n


def outer_precoders(h: np.ndarray, grouping: Grouping) -> list[np.ndarray]:
    """
    Block-diagonalizing outer precoders.

    B_g is an orthonormal basis of the null space of the rows of every
    user outside group g.

    Returns:
        List of L x r_g matrices
    """
    h = np.asarray(h, dtype=float)
    l = h.shape[1]
    outer = []
    for g in range(grouping.num_groups):
        others = h[grouping.assignments != g]
        if others.shape[0] == 0:
            outer.append(np.eye(l))
            continue
        basis = null_space(others, rcond=RANK_TOL)
        if basis.shape[1] < 1:
            raise InfeasibleError(
                f"group {g} has no spatial dimension left after nulling "
                f"{others.shape[0]} users with L={l}; use fewer groups or more APs",
                detail="outer",
            )
        outer.append(basis)
    return outer


def inner_precoders(
    h: np.ndarray,
    grouping: Grouping,
    outer: list[np.ndarray],
    strategy: CommonStrategy = CommonStrategy.EQUAL_GAIN,
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """
    Per-group ZF and common precoders on the effective channels H_g B_g.

    Returns:
        Tuple of (inner private precoders r_g x K_g, inner common precoders r_g)
    """
    private, common = [], []
    for g, basis in enumerate(outer):
        effective = h[grouping.members(g)] @ basis
        private.append(zf_precoder(effective))
        common.append(common_precoder(effective, strategy))
    return private, common


def rs_precoders(h: np.ndarray, strategy: CommonStrategy = CommonStrategy.EQUAL_GAIN) -> PrecoderSet:
    """ZF private precoders plus one common precoder."""
    return PrecoderSet(private=zf_precoder(h), common=common_precoder(h, strategy))


def hrs_precoders(
    h: np.ndarray,
    grouping: Grouping,
    strategy: CommonStrategy = CommonStrategy.EQUAL_GAIN,
) -> PrecoderSet:
    """
    Full HRS precoder set.

    The outer common precoder serves every user; private columns are the
    composite B_g w_gk in user order.
    """
    h = np.asarray(h, dtype=float)
    outer = outer_precoders(h, grouping)
    inner_private, inner_common = inner_precoders(h, grouping, outer, strategy)
    composite = np.zeros((h.shape[1], h.shape[0]))
    for g, basis in enumerate(outer):
        composite[:, grouping.members(g)] = basis @ inner_private[g]
    return PrecoderSet(
        private=composite,
        common=common_precoder(h, strategy),
        outer=tuple(outer),
        inner_common=tuple(inner_common),
        inner_private=tuple(inner_private),
    )


def zf_residual(h: np.ndarray, w: np.ndarray) -> float:
    """Largest |h_j . w_k| / |h_j| over j != k."""
    h = np.asarray(h, dtype=float)
    norms = np.linalg.norm(h, axis=1)
    leak = np.abs(h @ w) / np.where(norms > 0, norms, 1.0)[:, None]
    np.fill_diagonal(leak, 0.0)
    return float(leak.max(initial=0.0))


def outer_residual(h: np.ndarray, grouping: Grouping, outer) -> float:
    """Largest |h_j B_g| / |h_j| over groups g and users j outside g."""
    h = np.asarray(h, dtype=float)
    norms = np.linalg.norm(h, axis=1)
    worst = 0.0
    for g, basis in enumerate(outer):
        for j in np.flatnonzero(grouping.assignments != g):
            if norms[j] > 0:
                worst = max(worst, float(np.linalg.norm(h[j] @ basis)) / norms[j])
    return worst
