import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vidvote.zernike import moment_orders, radial_polynomial, zernike_moments
from vidvote.video_io import Frame, luma_from_rgb


def frame_from_luma(gray):
    """Wrap an (h, w) array in [0, 1] as a gray frame."""
    u8 = np.clip(np.round(np.asarray(gray) * 255), 0, 255).astype(np.uint8)
    rgb = np.repeat(u8[..., None], 3, axis=2)
    return Frame(rgb, luma_from_rgb(rgb))


def test_moment_order_enumeration():
    orders = moment_orders(10)
    assert orders == [(0, 0), (1, 1), (2, 0), (2, 2), (3, 1), (3, 3),
                      (4, 0), (4, 2), (4, 4), (5, 1)]


def test_radial_polynomial_known_values():
    rho = np.array([0.0, 0.5, 1.0])
    # R_00 = 1, R_11 = rho, R_20 = 2 rho^2 - 1, R_22 = rho^2
    assert np.allclose(radial_polynomial(0, 0, rho), [1, 1, 1])
    assert np.allclose(radial_polynomial(1, 1, rho), rho)
    assert np.allclose(radial_polynomial(2, 0, rho), 2 * rho**2 - 1)
    assert np.allclose(radial_polynomial(2, 2, rho), rho**2)
    assert np.allclose(radial_polynomial(4, 0, rho), 6 * rho**4 - 6 * rho**2 + 1)


def test_constant_frame_responds_only_at_order_zero():
    f = frame_from_luma(np.full((64, 64), 0.7))
    mags = zernike_moments(f).values
    assert mags[0] > 0
    assert np.max(mags[1:]) < 1e-6


def test_rotation_invariance_90_180():
    """Magnitudes stay within 2% relative under exact grid rotations."""
    rng = np.random.default_rng(5)
    base = rng.uniform(0.0, 1.0, size=(64, 64))
    # smooth a little so the image is not pure pixel noise
    k = np.ones((5, 5)) / 25.0
    from scipy.ndimage import convolve

    img = convolve(base, k, mode="nearest")
    m0 = zernike_moments(frame_from_luma(img)).values
    for rot in (1, 2):
        mr = zernike_moments(frame_from_luma(np.rot90(img, rot))).values
        rel = np.abs(mr - m0) / np.maximum(np.abs(m0), 1e-12)
        keep = np.abs(m0) > 1e-9  # relative error is meaningless at zero
        assert np.max(rel[keep]) < 0.02


def test_rotation_invariance_structured_shape():
    img = np.zeros((64, 64))
    img[20:44, 28:36] = 1.0  # vertical bar through the center
    m0 = zernike_moments(frame_from_luma(img)).values
    m90 = zernike_moments(frame_from_luma(np.rot90(img))).values
    keep = np.abs(m0) > 1e-9
    rel = np.abs(m90 - m0) / np.maximum(np.abs(m0), 1e-12)
    assert np.max(rel[keep]) < 0.02


def test_center_pixel_brute_force():
    """8x8 frame with one bright pixel near center, checked against a
    direct double sum of the polynomial definition over the disk."""
    img = np.zeros((8, 8))
    img[4, 4] = 1.0
    frame = frame_from_luma(img)
    mags = zernike_moments(frame, count=6).values

    lum = frame.luma
    h = w = 8
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    radius = min(h, w) / 2.0
    disk = [
        (yy, xx)
        for yy in range(h)
        for xx in range(w)
        if np.hypot((xx - cx) / radius, (yy - cy) / radius) <= 1.0
    ]
    mean = sum(lum[p] for p in disk) / len(disk)
    for i, (n, m) in enumerate(moment_orders(6)):
        acc = 0.0 + 0.0j
        for yy, xx in disk:
            rho = np.hypot((xx - cx) / radius, (yy - cy) / radius)
            theta = np.arctan2(yy - cy, xx - cx)
            if (n, m) == (0, 0):
                acc += lum[yy, xx]
            else:
                r = radial_polynomial(n, m, np.array([rho]))[0]
                acc += (lum[yy, xx] - mean) * r * np.exp(-1j * m * theta)
        scale = 1.0 if (n, m) == (0, 0) else (n + 1)
        want = abs(acc) * scale / (np.pi * radius**2)
        assert abs(mags[i] - want) < 1e-12


def test_feature_length_and_channel():
    f = frame_from_luma(np.linspace(0, 1, 64 * 64).reshape(64, 64))
    feat = zernike_moments(f)
    assert feat.values.shape == (10,)
    assert np.all(np.isfinite(feat.values))


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=10, deadline=None)
def test_magnitudes_finite_nonnegative(seed):
    rng = np.random.default_rng(seed)
    img = rng.uniform(0, 1, size=(32, 32))
    mags = zernike_moments(frame_from_luma(img)).values
    assert np.all(mags >= 0)
    assert np.all(np.isfinite(mags))
