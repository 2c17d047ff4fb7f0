"""Hand-built channels and groupings for tests."""

import numpy as np

from sim.models import ChannelMatrix, ChannelMode, Grouping


def normalized(gains) -> ChannelMatrix:
    """Unit-noise channel with the given gains (rows normalized)."""
    h = np.asarray(gains, dtype=float)
    h = h / np.linalg.norm(h, axis=1, keepdims=True)
    return ChannelMatrix(gains=h, noise_var=np.ones(h.shape[0]), mode=ChannelMode.NORMALIZED)


def grouping_of(assignments) -> Grouping:
    """Grouping with zero centroids."""
    a = np.asarray(assignments, dtype=int)
    return Grouping(assignments=a, centroids=np.zeros((int(a.max()) + 1, 2)))
