"""Shared feature containers passed between extraction and classification."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class DenseFeature:
    """A fixed-length real vector computed for one video element.

    Histogram-typed channels are L1-normalized; other channels (Zernike
    magnitudes, keyframe statistics) carry their raw values.
    """

    channel_id: str
    values: np.ndarray

    @property
    def is_empty(self):
        return False


@dataclass(frozen=True)
class LocalDescriptor:
    """One local descriptor vector with its space(-time) anchor."""

    vector: np.ndarray
    anchor: object  # Keypoint or SpaceTimePoint
