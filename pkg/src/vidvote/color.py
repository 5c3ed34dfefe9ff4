"""Global color histograms: quantized RGB and hue-component histograms."""

from __future__ import annotations

import numpy as np

from .errors import ConfigError
from .features import DenseFeature

# Saturation below this counts as achromatic; hue is undefined there.
ACHROMATIC_SATURATION = 0.05


def rgb_levels_for_bins(bins):
    """Quantization levels per RGB axis for a total bin count.

    64 bins is the classic 4x4x4 cube. 256 bins is realized as 8x8x4
    (coarser on blue, where the eye resolves least); other perfect cubes
    quantize uniformly.
    """
    if bins == 256:
        return (8, 8, 4)
    root = round(bins ** (1 / 3))
    if root**3 == bins:
        return (root, root, root)
    raise ConfigError(f"no RGB quantization defined for {bins} bins")


def rgb_histogram(frame, bins_per_axis) -> DenseFeature:
    """L1-normalized histogram over a quantized RGB cube.

    bins_per_axis is either one int (same level count on each axis) or a
    (r, g, b) tuple of level counts.
    """
    if isinstance(bins_per_axis, int):
        levels = (bins_per_axis,) * 3
    else:
        levels = tuple(bins_per_axis)
    rl, gl, bl = levels
    rgb = frame.rgb.reshape(-1, 3).astype(np.int64)
    r = rgb[:, 0] * rl // 256
    g = rgb[:, 1] * gl // 256
    b = rgb[:, 2] * bl // 256
    cells = (r * gl + g) * bl + b
    counts = np.bincount(cells, minlength=rl * gl * bl).astype(np.float64)
    return DenseFeature("rgb_hist", counts / counts.sum())


def hue_and_saturation(rgb):
    """Per-pixel hue (degrees in [0, 360)) and saturation via the hexcone model."""
    f = rgb.astype(np.float64) / 255.0
    r, g, b = f[..., 0], f[..., 1], f[..., 2]
    mx = f.max(axis=-1)
    mn = f.min(axis=-1)
    delta = mx - mn
    sat = np.where(mx > 0, delta / np.where(mx > 0, mx, 1.0), 0.0)
    safe = np.where(delta > 0, delta, 1.0)
    hue = np.select(
        [mx == r, mx == g],
        [np.mod((g - b) / safe, 6.0), (b - r) / safe + 2.0],
        default=(r - g) / safe + 4.0,
    )
    hue = np.where(delta > 0, hue * 60.0, 0.0)
    return hue, sat


def hue_histogram(frame, bins) -> DenseFeature:
    """L1-normalized hue histogram, achromatic pixels excluded.

    Pixels with saturation below ACHROMATIC_SATURATION carry no usable
    hue and are dropped from the count; a frame with no chromatic pixels
    falls back to the uniform histogram.
    """
    hue, sat = hue_and_saturation(frame.rgb)
    chromatic = sat >= ACHROMATIC_SATURATION
    if not chromatic.any():
        return DenseFeature("hue_hist", np.full(bins, 1.0 / bins))
    idx = np.minimum((hue[chromatic] / 360.0 * bins).astype(np.int64), bins - 1)
    counts = np.bincount(idx, minlength=bins).astype(np.float64)
    return DenseFeature("hue_hist", counts / counts.sum())
