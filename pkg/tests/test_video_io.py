import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vidvote.errors import FormatError
from vidvote.video_io import (
    FrameSequence,
    decode_video,
    luma_from_rgb,
    rgb_to_ycbcr,
    write_pnm,
    write_y4m,
    ycbcr_to_rgb,
)

def solid_frames(colors, h=32, w=32):
    out = np.zeros((len(colors), h, w, 3), np.uint8)
    for t, c in enumerate(colors):
        out[t] = c
    return out


def random_video(seed, frames=8, h=32, w=32):
    return np.random.default_rng(seed).integers(0, 256, size=(frames, h, w, 3), dtype=np.uint8)


def test_luma_weights():
    # affine formula on the primaries, weights 0.299 / 0.587 / 0.114
    pure = np.eye(3, dtype=np.uint8) * 255
    lum = luma_from_rgb(pure)
    assert abs(lum[0] - 0.299) < 1e-12
    assert abs(lum[1] - 0.587) < 1e-12
    assert abs(lum[2] - 0.114) < 1e-12
    assert luma_from_rgb(np.zeros(3, np.uint8)) == 0.0
    assert abs(luma_from_rgb(np.full(3, 255, np.uint8)) - 1.0) < 1e-12


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_luma_affine_formula_random_pixels(seed):
    rgb = np.random.default_rng(seed).integers(0, 256, size=(17, 3), dtype=np.uint8)
    expect = (0.299 * rgb[:, 0] + 0.587 * rgb[:, 1] + 0.114 * rgb[:, 2]) / 255.0
    assert np.max(np.abs(luma_from_rgb(rgb) - expect)) < 1e-12


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_ycbcr_roundtrip_within_one_level(seed):
    rgb = np.random.default_rng(seed).integers(0, 256, size=(9, 9, 3), dtype=np.uint8)
    back = ycbcr_to_rgb(rgb_to_ycbcr(rgb))
    assert np.max(np.abs(back.astype(int) - rgb.astype(int))) <= 1


def test_ycbcr_gray_axis():
    gray = np.full((4, 4, 3), 128, np.uint8)
    ycc = rgb_to_ycbcr(gray)
    assert np.all(ycc[..., 0] == 128)
    assert np.all(ycc[..., 1] == 128) and np.all(ycc[..., 2] == 128)


def test_y4m_444_roundtrip_exact(tmp_path):
    video = random_video(3, frames=5, h=24, w=20)
    path = tmp_path / "clip.y4m"
    write_y4m(path, video, frame_rate=30, chroma="444")
    seq = decode_video(path)
    assert seq.frame_count == 5
    assert seq.frame_rate == 30
    # 4:4:4 keeps every plane at full resolution; the only loss is uint8
    # rounding through the two matrix trips, bounded by one level.
    assert np.max(np.abs(seq.rgb.astype(int) - video.astype(int))) <= 1


def test_y4m_420_preserves_luma(tmp_path):
    # Low-saturation video so the reconstruction stays inside the RGB
    # gamut: clipping is the one thing that can bleed chroma into luma.
    rng = np.random.default_rng(4)
    gray = rng.integers(40, 216, size=(3, 16, 16, 1))
    video = np.clip(gray + rng.integers(-15, 16, size=(3, 16, 16, 3)), 0, 255).astype(np.uint8)
    path = tmp_path / "clip.y4m"
    write_y4m(path, video, chroma="420jpeg")
    seq = decode_video(path)
    assert np.max(np.abs(seq.luma - luma_from_rgb(video))) < 2.0 / 255.0


def test_y4m_420_odd_dimensions_rejected(tmp_path):
    video = random_video(5, frames=2, h=15, w=16)
    with pytest.raises(FormatError):
        write_y4m(tmp_path / "odd.y4m", video, chroma="420jpeg")


def test_decode_sets_video_id_and_default(tmp_path):
    video = solid_frames([(10, 20, 30)] * 2)
    path = tmp_path / "named.y4m"
    write_y4m(path, video)
    assert decode_video(path).video_id == "named"
    assert decode_video(path, video_id="other").video_id == "other"


def test_decode_rejects_bad_magic(tmp_path):
    path = tmp_path / "junk.y4m"
    path.write_bytes(b"RIFFxxxxWEBP this is not yuv4mpeg\n")
    with pytest.raises(FormatError):
        decode_video(path)


def test_decode_rejects_headerless_truncation(tmp_path):
    path = tmp_path / "trunc.y4m"
    path.write_bytes(b"YUV4MPEG2 W16 H16 F25:1 C444\nFRAME\n" + b"\x00" * 10)
    with pytest.raises(FormatError):
        decode_video(path)


def test_decode_missing_file(tmp_path):
    with pytest.raises(OSError):
        decode_video(tmp_path / "nope.y4m")


def test_pixmap_directory_roundtrip(tmp_path):
    video = random_video(6, frames=3, h=8, w=10)
    d = tmp_path / "frames"
    d.mkdir()
    for t in range(3):
        write_pnm(d / f"f{t:04d}.ppm", video[t])
    seq = decode_video(d)
    assert seq.frame_count == 3
    assert np.array_equal(seq.rgb, video)


def test_pixmap_directory_empty(tmp_path):
    d = tmp_path / "frames"
    d.mkdir()
    with pytest.raises(FormatError):
        decode_video(d)


def test_decode_deterministic(tmp_path):
    video = random_video(7, frames=4)
    path = tmp_path / "clip.y4m"
    write_y4m(path, video)
    a, b = decode_video(path), decode_video(path)
    assert np.array_equal(a.rgb, b.rgb)
    assert np.array_equal(a.luma, b.luma)


def test_frame_sequence_shape_checks():
    with pytest.raises(ValueError):
        FrameSequence("bad", np.zeros((4, 4, 3), np.uint8))
    with pytest.raises(FormatError):
        FrameSequence("empty", np.zeros((0, 4, 4, 3), np.uint8))


def test_frame_view():
    video = solid_frames([(255, 0, 0), (0, 255, 0)])
    seq = FrameSequence("two", video)
    assert len(seq) == 2
    f = seq[1]
    assert f.height == 32 and f.width == 32
    assert abs(f.luma[0, 0] - 0.587) < 1e-12
