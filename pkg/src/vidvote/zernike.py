"""Zernike moment magnitudes of the luma channel.

The frame's luma is mapped onto the unit disk inscribed in the frame;
pixels outside the disk are ignored. Moments are enumerated by radial
order n ascending, repetition m ascending over valid (n - m even) pairs:
(0,0), (1,1), (2,0), (2,2), (3,1), (3,3), (4,0), (4,2), (4,4), (5,1), ...
Only magnitudes are returned, which makes the feature rotation-invariant.

The disk mean of the image is subtracted before projecting onto every
non-constant basis function. On the discrete grid the raw basis functions
are not exactly orthogonal to constants, so without the centering a flat
frame would leak its DC level into higher orders; with it, a constant
frame responds only at order 0, and 90/180-degree rotations (which
permute the disk's pixels exactly) leave the magnitudes unchanged up to
float roundoff.
"""

from __future__ import annotations

from math import factorial

import numpy as np

from .features import DenseFeature

DEFAULT_MOMENT_COUNT = 10


def moment_orders(count=DEFAULT_MOMENT_COUNT):
    """First `count` (n, m) pairs in the fixed enumeration order."""
    orders = []
    n = 0
    while len(orders) < count:
        for m in range(n % 2, n + 1, 2):
            orders.append((n, m))
            if len(orders) == count:
                break
        n += 1
    return orders


def radial_polynomial(n, m, rho):
    """Zernike radial polynomial R_nm evaluated at rho."""
    r = np.zeros_like(rho)
    for s in range((n - m) // 2 + 1):
        coeff = (
            (-1) ** s
            * factorial(n - s)
            / (factorial(s) * factorial((n + m) // 2 - s) * factorial((n - m) // 2 - s))
        )
        r += coeff * rho ** (n - 2 * s)
    return r


def zernike_moments(frame, count=DEFAULT_MOMENT_COUNT) -> DenseFeature:
    """Magnitudes of the first `count` Zernike moments of the frame's luma."""
    luma = frame.luma
    h, w = luma.shape
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    radius = min(h, w) / 2.0
    ys, xs = np.mgrid[0:h, 0:w]
    rho = np.hypot((xs - cx) / radius, (ys - cy) / radius)
    inside = rho <= 1.0

    f = luma[inside]
    rho = rho[inside]
    theta = np.arctan2(ys[inside] - cy, xs[inside] - cx)
    cell_area = 1.0 / radius**2
    centered = f - f.mean()

    mags = np.empty(count)
    for i, (n, m) in enumerate(moment_orders(count)):
        if (n, m) == (0, 0):
            a = f.sum() * cell_area / np.pi
        else:
            basis = radial_polynomial(n, m, rho) * np.exp(-1j * m * theta)
            a = (basis * centered).sum() * (n + 1) * cell_area / np.pi
        mags[i] = abs(a)
    return DenseFeature("zernike", mags)
