"""
Line-of-sight channel construction.

Combines the beam model with the ADR geometry into the K x L gain matrix
and per-user noise variances, and provides the normalized view used by
the SNR sweeps.
"""

import math

import numpy as np
import pandas as pd

from .beam import power_on_aperture
from .errors import ConfigError, InfeasibleError
from .geometry import emitters, incidence_angle
from .models import ChannelMatrix, ChannelMode, NoiseParams, Scene


def _element_gain(scene: Scene, user_index: int, position: np.ndarray, axis: np.ndarray) -> float:
    user = scene.users[user_index]
    u = np.asarray(user.position, dtype=float)
    v = u - position
    axial = float(np.dot(v, axis))
    if axial <= 0.0:
        return 0.0
    radial = float(np.linalg.norm(v - axial * axis))
    gain = 0.0
    for pd_ in user.adr:
        theta = incidence_angle(pd_, u, position)
        # boundary angle counts as inside
        if theta <= pd_.fov_half_angle:
            gain += pd_.responsivity * power_on_aperture(scene.vcsel, axial, radial, pd_.area, theta)
    return gain


def link_gain(scene: Scene, user_index: int, ap_index: int) -> float:
    """
    Photocurrent of one user from one VCSEL of a transmit element (A).

    Sums responsivity x collected power over the photodiodes whose
    incidence angle is within their field of view. In the ring layout
    `ap_index` runs over individual VCSEL elements.
    """
    positions, axes, _ = emitters(scene)
    if not 0 <= user_index < scene.num_users or not 0 <= ap_index < len(positions):
        raise ConfigError(f"invalid link ({user_index}, {ap_index})")
    return _element_gain(scene, user_index, positions[ap_index], axes[ap_index])


def build_channel(scene: Scene, noise: NoiseParams) -> ChannelMatrix:
    """
    Physical channel matrix of a scene.

    Args:
        scene: Scene with at least one user
        noise: Receiver noise parameters

    Returns:
        ChannelMatrix in physical mode; users with all-zero rows are
        listed in `uncovered`
    """
    if scene.num_users < 1:
        raise ConfigError("channel needs at least one user")
    positions, axes, multiplicity = emitters(scene)
    gains = np.array(
        [
            [_element_gain(scene, k, positions[l], axes[l]) * multiplicity[l] for l in range(len(positions))]
            for k in range(scene.num_users)
        ]
    )
    noise_var = np.full(scene.num_users, noise.thermal_variance)
    if noise.include_shot:
        noise_var = noise_var + 2.0 * noise.electron_charge * gains.sum(axis=1) * noise.bandwidth
    uncovered = tuple(int(k) for k in np.flatnonzero(~gains.any(axis=1)))
    return ChannelMatrix(gains=gains, noise_var=noise_var, mode=ChannelMode.PHYSICAL, uncovered=uncovered)


def normalize_channel(channel: ChannelMatrix, snr_db: float) -> tuple[ChannelMatrix, float]:
    """
    Scale every row to unit norm with unit noise.

    Returns:
        Tuple of (normalized channel, total transmit power 10^(snr_db/10))
    """
    norms = np.linalg.norm(channel.gains, axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise InfeasibleError(
            f"user {int(zero[0])} is not covered by any transmitter",
            detail="coverage",
        )
    gains = channel.gains / norms[:, None]
    normalized = ChannelMatrix(
        gains=gains,
        noise_var=np.ones(channel.num_users),
        mode=ChannelMode.NORMALIZED,
    )
    return normalized, 10.0 ** (snr_db / 10.0)


def physical_snr_db(channel: ChannelMatrix, power: float = 1.0) -> float:
    """Mean per-user received SNR P |h_k|^2 / sigma_k^2 in dB."""
    snr = power * np.sum(channel.gains**2, axis=1) / channel.noise_var
    mean = float(np.mean(snr))
    return 10.0 * math.log10(mean) if mean > 0 else -math.inf


def channel_to_frame(channel: ChannelMatrix) -> pd.DataFrame:
    """One row per user: ap_1..ap_L gains and noise_var."""
    df = pd.DataFrame(
        channel.gains,
        columns=[f"ap_{l + 1}" for l in range(channel.num_tx)],
    )
    df["noise_var"] = channel.noise_var
    return df
