import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vidvote.features import LocalDescriptor
from vidvote.sift import (
    DEFAULT_SIFT_PARAMS,
    HUESIFT_DIM,
    PCA_DIM,
    SIFT_DIM,
    Keypoint,
    _gaussian_pyramid,
    apply_pca,
    describe_huesift,
    describe_sift,
    detect_sift_keypoints,
    finalize_descriptor,
    project_descriptor_matrix,
    project_pca_sift,
)
from vidvote.video_io import Frame, luma_from_rgb


def gray_frame(gray):
    u8 = np.clip(np.round(np.asarray(gray) * 255), 0, 255).astype(np.uint8)
    rgb = np.repeat(u8[..., None], 3, axis=2)
    return Frame(rgb, luma_from_rgb(rgb))


def color_frame(rgb):
    rgb = np.asarray(rgb, np.uint8)
    return Frame(rgb, luma_from_rgb(rgb))


def blob_image(size, cy, cx, sigma, amp=0.8):
    y, x = np.mgrid[0:size, 0:size]
    return amp * np.exp(-((y - cy) ** 2 + (x - cx) ** 2) / (2.0 * sigma**2))


def test_pyramid_octaves_until_min_dim_16():
    # 64 -> 32 -> 16 -> (8 would be < 16, stop)
    pyr = _gaussian_pyramid(np.zeros((64, 64)), DEFAULT_SIFT_PARAMS)
    assert len(pyr) == 3
    assert pyr[0][0].shape == (64, 64)
    assert pyr[1][0].shape == (32, 32)
    assert pyr[2][0].shape == (16, 16)
    # 3 intervals/octave need intervals+3 gaussian layers
    assert all(len(oct) == DEFAULT_SIFT_PARAMS.intervals + 3 for oct in pyr)


def test_constant_frame_yields_no_keypoints():
    f = gray_frame(np.full((64, 64), 0.5))
    assert detect_sift_keypoints(f, DEFAULT_SIFT_PARAMS) == []


def test_gaussian_blob_detected_near_center():
    img = blob_image(64, 31.0, 33.0, sigma=4.0)
    kps = detect_sift_keypoints(gray_frame(img), DEFAULT_SIFT_PARAMS)
    assert kps, "blob must produce at least one keypoint"
    best = min(kps, key=lambda k: (k.x - 33.0) ** 2 + (k.y - 31.0) ** 2)
    assert abs(best.x - 33.0) <= 2.0
    assert abs(best.y - 31.0) <= 2.0
    # DoG response of a gaussian blob peaks near the blob's own scale
    assert 4.0 / 1.5 <= best.scale <= 4.0 * 1.5


def test_rotated_image_maps_keypoints():
    rng = np.random.default_rng(9)
    img = np.zeros((48, 48))
    img[10:20, 12:22] = 0.9
    img[30:38, 28:40] = 0.5
    img += rng.uniform(0, 0.02, img.shape)
    f0 = gray_frame(img)
    f90 = gray_frame(np.rot90(img).copy())
    k0 = detect_sift_keypoints(f0, DEFAULT_SIFT_PARAMS)
    k90 = detect_sift_keypoints(f90, DEFAULT_SIFT_PARAMS)
    assert len(k0) == len(k90)
    h = img.shape[0]
    # np.rot90 maps (y, x) -> (h-1-x, y)
    mapped = sorted((round(h - 1 - k.x), round(k.y)) for k in k0)
    got = sorted((round(k.y), round(k.x)) for k in k90)
    for (my, mx), (gy, gx) in zip(mapped, got):
        assert abs(my - gy) <= 1 and abs(mx - gx) <= 1


def test_descriptor_shape_and_norm():
    img = blob_image(64, 32, 32, 4.0) + blob_image(64, 20, 40, 3.0, 0.4)
    f = gray_frame(img)
    kps = detect_sift_keypoints(f, DEFAULT_SIFT_PARAMS)
    assert kps
    for kp in kps:
        d = describe_sift(f, kp)
        assert d.vector.shape == (SIFT_DIM,)
        n = np.linalg.norm(d.vector)
        assert n == 0 or abs(n - 1.0) < 1e-6


def test_descriptor_constant_patch_is_zero():
    f = gray_frame(np.full((64, 64), 0.4))
    kp = Keypoint(x=32.0, y=32.0, scale=2.0, orientation=0.0, response=1.0)
    assert np.all(describe_sift(f, kp).vector == 0)


def test_finalize_descriptor_matches_direct_recomputation():
    """normalize -> clamp 0.2 -> renormalize, re-derived independently."""
    rng = np.random.default_rng(3)
    for _ in range(200):
        raw = rng.uniform(0, 1, size=SIFT_DIM) * rng.choice([1.0, 10.0, 1e-3])
        got = finalize_descriptor(raw.copy())
        unit = raw / np.linalg.norm(raw)
        clamped = np.minimum(unit, 0.2)
        assert np.max(clamped) <= 0.2 + 1e-9
        want = clamped / np.linalg.norm(clamped)
        assert np.allclose(got, want, atol=1e-12)
        assert abs(np.linalg.norm(got) - 1.0) < 1e-6


def test_finalize_descriptor_zero_passthrough():
    z = np.zeros(SIFT_DIM)
    assert np.all(finalize_descriptor(z) == 0)


def test_huesift_concatenation():
    rng = np.random.default_rng(4)
    rgb = rng.integers(0, 256, size=(64, 64, 3), dtype=np.uint8)
    f = color_frame(rgb)
    kp = Keypoint(x=30.0, y=30.0, scale=2.5, orientation=0.5, response=1.0)
    sift = describe_sift(f, kp).vector
    hue = describe_huesift(f, kp).vector
    assert hue.shape == (HUESIFT_DIM,)
    assert np.allclose(hue[:SIFT_DIM], sift)
    assert abs(hue[SIFT_DIM:].sum() - 1.0) < 1e-9


def test_huesift_gray_patch_uniform_hue():
    f = gray_frame(np.linspace(0.2, 0.8, 64 * 64).reshape(64, 64))
    kp = Keypoint(x=32.0, y=32.0, scale=2.0, orientation=0.0, response=1.0)
    tail = describe_huesift(f, kp).vector[SIFT_DIM:]
    assert np.allclose(tail, tail[0])


def test_huesift_recolor_moves_only_hue_part():
    # same luma plane under both colorings, so the gradient part cannot move
    rng = np.random.default_rng(6)
    base = rng.integers(60, 140, size=(64, 64), dtype=np.uint8)
    red = np.stack([base + 60, base // 2, base // 2], axis=2).astype(np.uint8)
    blue = red[..., ::-1].copy()
    shared_luma = luma_from_rgb(red)
    red_f = Frame(red, shared_luma)
    blue_f = Frame(blue, shared_luma)
    kp = Keypoint(x=32.0, y=32.0, scale=2.0, orientation=0.0, response=1.0)
    red_d = describe_huesift(red_f, kp).vector
    blue_d = describe_huesift(blue_f, kp).vector
    assert np.allclose(red_d[:SIFT_DIM], blue_d[:SIFT_DIM], atol=1e-9)
    red_hue, blue_hue = red_d[SIFT_DIM:], blue_d[SIFT_DIM:]
    assert red_hue.argmax() != blue_hue.argmax()
    assert np.linalg.norm(red_hue - blue_hue, 1) > 0.5


def test_descriptor_rotation_smoke():
    """Orientation normalization should nearly cancel a 90 degree turn."""
    rng = np.random.default_rng(5)
    from scipy import ndimage

    img = ndimage.gaussian_filter(rng.uniform(0, 1, size=(49, 49)), 2.0)
    f0 = gray_frame(img)
    f90 = gray_frame(np.rot90(img).copy())
    theta = 0.3
    kp0 = Keypoint(x=24.0, y=24.0, scale=3.0, orientation=theta, response=1.0)
    d0 = describe_sift(f0, kp0).vector
    dists = []
    for sign in (1.0, -1.0):
        kp = Keypoint(24.0, 24.0, 3.0, theta + sign * np.pi / 2, 1.0)
        dists.append(np.linalg.norm(describe_sift(f90, kp).vector - d0))
    assert min(dists) < 0.3


def test_huesift_red_texture_concentrates_near_hue_zero():
    rng = np.random.default_rng(11)
    base = rng.integers(100, 200, size=(64, 64), dtype=np.uint8)
    red = np.stack([base, base // 4, base // 4], axis=2).astype(np.uint8)
    kp = Keypoint(x=32.0, y=32.0, scale=2.0, orientation=0.0, response=1.0)
    tail = describe_huesift(color_frame(red), kp).vector[SIFT_DIM:]
    # hue 0 sits in the first bin; allow spill into the wraparound neighbors
    assert tail[0] + tail[1] + tail[-1] > 0.99


def test_pca_exact_two_dimensional_subspace():
    rng = np.random.default_rng(13)
    basis = np.linalg.qr(rng.normal(size=(SIFT_DIM, 2)))[0].T
    coords = rng.normal(scale=(3.0, 1.0), size=(80, 2))
    data = coords @ basis + rng.normal(size=SIFT_DIM)
    with pytest.warns(RuntimeWarning):
        proj = project_pca_sift(data, PCA_DIM)
    assert proj.variances[:2].sum() / proj.variances.sum() > 1.0 - 1e-9
    low = project_descriptor_matrix(proj, data)
    back = low @ proj.components + proj.mean
    assert np.allclose(back, data, atol=1e-9)


def test_pca_shapes_and_isometry():
    rng = np.random.default_rng(7)
    train = rng.normal(size=(300, SIFT_DIM))
    proj = project_pca_sift(train, PCA_DIM)
    assert proj.components.shape == (PCA_DIM, SIFT_DIM)
    assert np.allclose(proj.components @ proj.components.T, np.eye(PCA_DIM), atol=1e-9)
    assert np.all(np.diff(proj.variances) <= 1e-12)

    pts = rng.normal(size=(40, SIFT_DIM))
    low = project_descriptor_matrix(proj, pts)
    assert low.shape == (40, PCA_DIM)
    # projection never stretches distances
    for i in range(0, 40, 7):
        for j in range(i + 1, 40, 11):
            orig = np.linalg.norm(pts[i] - pts[j])
            assert np.linalg.norm(low[i] - low[j]) <= orig + 1e-9


def test_pca_recovers_dominant_subspace():
    rng = np.random.default_rng(8)
    # variance concentrated on two coordinates
    data = np.zeros((500, SIFT_DIM))
    data[:, 0] = rng.normal(scale=5.0, size=500)
    data[:, 1] = rng.normal(scale=3.0, size=500)
    data += rng.normal(scale=0.01, size=data.shape)
    proj = project_pca_sift(data, 2)
    assert abs(abs(proj.components[0, 0]) - 1.0) < 0.01
    assert abs(abs(proj.components[1, 1]) - 1.0) < 0.01


def test_pca_rank_deficient_warns_but_stays_orthonormal():
    rng = np.random.default_rng(9)
    rank = 10
    thin = rng.normal(size=(50, rank)) @ rng.normal(size=(rank, SIFT_DIM))
    with pytest.warns(RuntimeWarning, match="rank"):
        proj = project_pca_sift(thin, PCA_DIM)
    assert np.allclose(proj.components @ proj.components.T, np.eye(PCA_DIM), atol=1e-8)


def test_apply_pca_single_descriptor():
    rng = np.random.default_rng(10)
    proj = project_pca_sift(rng.normal(size=(200, SIFT_DIM)), PCA_DIM)
    d = LocalDescriptor(rng.normal(size=SIFT_DIM), None)
    out = apply_pca(proj, d)
    assert out.vector.shape == (PCA_DIM,)
    assert np.allclose(out.vector, (d.vector - proj.mean) @ proj.components.T)


def test_detection_deterministic():
    rng = np.random.default_rng(12)
    img = rng.uniform(0, 1, size=(48, 48))
    f = gray_frame(img)
    a = detect_sift_keypoints(f, DEFAULT_SIFT_PARAMS)
    b = detect_sift_keypoints(f, DEFAULT_SIFT_PARAMS)
    assert a == b
