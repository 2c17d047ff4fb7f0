"""
Rate splitting: uniform power split, SINRs and rates, plus the OMA baseline.

Every receiver decodes the common stream first, treating all private
streams as noise (its own included), then its private stream after SIC.
"""

import math

import numpy as np

from .errors import ConfigError
from .models import PrecoderSet, RateBreakdown, RsPowerSplit, Scheme


def rs_split(total_power: float, alpha: float, k: int) -> RsPowerSplit:
    """
    Uniform RS split: P_c = P (1 - alpha), P_k = P alpha / K.

    Args:
        total_power: Transmit power P > 0
        alpha: Private fraction in (0, 1]
        k: Number of users

    Returns:
        RsPowerSplit
    """
    if not 0 < alpha <= 1:
        raise ConfigError(f"alpha must lie in (0, 1], got {alpha}")
    if k < 1:
        raise ConfigError("number of users must be >= 1")
    if total_power <= 0:
        raise ConfigError("total power must be positive")
    return RsPowerSplit(
        total_power=total_power,
        alpha=alpha,
        p_common=total_power * (1.0 - alpha),
        p_private=(total_power * alpha / k,) * k,
    )


def _private_terms(h: np.ndarray, w: np.ndarray, split: RsPowerSplit, k: int) -> np.ndarray:
    return np.asarray(split.p_private) * (h[k] @ w) ** 2


def rs_sinr_common(
    h: np.ndarray,
    w: np.ndarray,
    w_c: np.ndarray,
    split: RsPowerSplit,
    noise_var: np.ndarray,
    k: int,
) -> float:
    """Common-stream SINR of user k; every private stream counts as interference."""
    signal = split.p_common * float(h[k] @ w_c) ** 2
    return signal / (float(_private_terms(h, w, split, k).sum()) + float(noise_var[k]))


def rs_sinr_private(
    h: np.ndarray,
    w: np.ndarray,
    split: RsPowerSplit,
    noise_var: np.ndarray,
    k: int,
) -> float:
    """Private-stream SINR of user k after the common stream is removed."""
    terms = _private_terms(h, w, split, k)
    interference = float(np.delete(terms, k).sum())
    return float(terms[k]) / (interference + float(noise_var[k]))


def rs_rates(
    h: np.ndarray,
    precoders: PrecoderSet,
    split: RsPowerSplit,
    noise_var: np.ndarray,
) -> RateBreakdown:
    """
    RS rate breakdown.

    The common rate uses the weakest user's SINR so every user can decode it.
    """
    h = np.atleast_2d(np.asarray(h, dtype=float))
    users = range(h.shape[0])
    gamma_c = min(rs_sinr_common(h, precoders.private, precoders.common, split, noise_var, k) for k in users)
    r_private = tuple(
        math.log2(1.0 + rs_sinr_private(h, precoders.private, split, noise_var, k)) for k in users
    )
    return RateBreakdown(
        scheme=Scheme.RS,
        r_outer_common=0.0,
        r_inner_common=(math.log2(1.0 + gamma_c),),
        r_private=r_private,
    )


def oma_rates(h: np.ndarray, total_power: float, noise_var: np.ndarray) -> RateBreakdown:
    """
    Equal-time TDMA with matched-filter beamforming.

    User k gets the full power for 1/K of the time:
    R = (1/K) sum_k log2(1 + P |h_k|^2 / sigma_k^2).
    """
    h = np.atleast_2d(np.asarray(h, dtype=float))
    k = h.shape[0]
    snr = total_power * np.sum(h**2, axis=1) / np.asarray(noise_var, dtype=float)
    return RateBreakdown(
        scheme=Scheme.OMA,
        r_outer_common=0.0,
        r_inner_common=(),
        r_private=tuple(float(r) / k for r in np.log2(1.0 + snr)),
    )
