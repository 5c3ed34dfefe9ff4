import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vidvote.color import hue_histogram, rgb_histogram, rgb_levels_for_bins
from vidvote.errors import ConfigError
from vidvote.video_io import Frame, luma_from_rgb


def frame_of(rgb):
    rgb = np.asarray(rgb, np.uint8)
    return Frame(rgb, luma_from_rgb(rgb))


def test_levels_for_standard_bin_counts():
    assert rgb_levels_for_bins(64) == (4, 4, 4)
    assert rgb_levels_for_bins(256) == (8, 8, 4)
    assert rgb_levels_for_bins(8) == (2, 2, 2)
    with pytest.raises(ConfigError):
        rgb_levels_for_bins(100)


def test_rgb_histogram_two_color_frame():
    """Hand-derived cell indices for a 4x4x4 cube.

    Black (0,0,0) lands in cell 0; a bright red (250,10,10) has levels
    (3,0,0) which is cell 3*16 = 48. Three black pixels to one red.
    """
    rgb = np.zeros((2, 2, 3), np.uint8)
    rgb[0, 0] = (250, 10, 10)
    hist = rgb_histogram(frame_of(rgb), 4).values
    assert hist.shape == (64,)
    assert hist[0] == 0.75
    assert hist[48] == 0.25
    assert hist.sum() == 1.0


def test_rgb_histogram_256_shape():
    rgb = np.full((3, 3, 3), 128, np.uint8)
    hist = rgb_histogram(frame_of(rgb), rgb_levels_for_bins(256)).values
    assert hist.shape == (256,)
    assert abs(hist.sum() - 1.0) < 1e-9
    assert (hist >= 0).all()


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_rgb_histogram_permutation_invariant(seed):
    rng = np.random.default_rng(seed)
    rgb = rng.integers(0, 256, size=(8, 8, 3), dtype=np.uint8)
    flat = rgb.reshape(-1, 3)
    shuffled = flat[rng.permutation(len(flat))].reshape(8, 8, 3)
    a = rgb_histogram(frame_of(rgb), 4).values
    b = rgb_histogram(frame_of(shuffled), 4).values
    assert np.array_equal(a, b)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_histograms_normalized_nonnegative(seed):
    rng = np.random.default_rng(seed)
    rgb = rng.integers(0, 256, size=(6, 7, 3), dtype=np.uint8)
    for hist in (rgb_histogram(frame_of(rgb), 4).values, hue_histogram(frame_of(rgb), 16).values):
        assert (hist >= 0).all()
        assert abs(hist.sum() - 1.0) < 1e-9


def test_hue_histogram_pure_hues():
    # hue 0 (red) and hue 120 (green) land in opposite thirds of the wheel
    rgb = np.zeros((1, 2, 3), np.uint8)
    rgb[0, 0] = (255, 0, 0)
    rgb[0, 1] = (0, 255, 0)
    hist = hue_histogram(frame_of(rgb), 12).values
    assert hist[0] == 0.5
    assert hist[4] == 0.5  # 120/360 * 12 = bin 4


def test_hue_histogram_gray_fallback():
    rgb = np.full((4, 4, 3), 60, np.uint8)
    hist = hue_histogram(frame_of(rgb), 10).values
    assert np.allclose(hist, 0.1)


def test_hue_histogram_ignores_achromatic_pixels():
    rgb = np.full((2, 2, 3), 90, np.uint8)  # gray, carries no hue
    rgb[0, 0] = (0, 0, 255)
    hist = hue_histogram(frame_of(rgb), 12).values
    assert hist[8] == 1.0  # 240/360 * 12 = bin 8, the only chromatic pixel
