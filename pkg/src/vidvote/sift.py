"""Difference-of-Gaussians keypoints and local gradient descriptors.

Scale-space extrema of a DoG pyramid (3 intervals per octave, octaves
until the smaller image dimension drops below 16), refined to sub-pixel
position by a quadratic fit, filtered by contrast and edge-ratio tests,
and described by the usual 4x4 grid of 8-bin gradient orientation
histograms (128 values, L2-normalized, clamped at 0.2, renormalized).

Two variants ride on top of the base descriptor: a hue-augmented one
that appends a 36-bin hue histogram of the support patch, and a reduced
36-d one obtained by PCA over a training set of base descriptors.

Patches never fail near the frame edge: samples outside the frame read
as zero (zero gradient), which slightly dampens border descriptors but
keeps every keypoint describable.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .color import ACHROMATIC_SATURATION, hue_and_saturation
from .errors import ValidationError
from .features import LocalDescriptor

_IMG_BORDER = 5
_MAX_INTERP_STEPS = 5
_ORI_BINS = 36
_ORI_SIGMA_FACTOR = 1.5
_ORI_RADIUS_FACTOR = 3.0  # orientation window radius, in units of its Gaussian sigma
_ORI_PEAK_RATIO = 0.8
_DESC_GRID = 4
_DESC_ORI_BINS = 8
_DESC_SCALE_FACTOR = 3.0  # descriptor cell width, in units of keypoint scale
_DESC_CLAMP = 0.2
HUE_PATCH_BINS = 36
PCA_DIM = 36
SIFT_DIM = _DESC_GRID * _DESC_GRID * _DESC_ORI_BINS  # 128
HUESIFT_DIM = SIFT_DIM + HUE_PATCH_BINS  # 164


@dataclass(frozen=True)
class SiftParams:
    intervals: int = 3
    sigma: float = 1.6
    contrast_threshold: float = 0.03
    edge_ratio: float = 10.0
    min_octave_dim: int = 16
    assumed_blur: float = 0.5


DEFAULT_SIFT_PARAMS = SiftParams()


@dataclass(frozen=True)
class Keypoint:
    x: float
    y: float
    scale: float
    orientation: float
    response: float


def _gaussian_pyramid(luma, params):
    s = params.intervals
    k = 2.0 ** (1.0 / s)
    base_blur = np.sqrt(max(params.sigma**2 - params.assumed_blur**2, 0.01))
    img = ndimage.gaussian_filter(luma, base_blur, mode="nearest")
    octaves = []
    while min(img.shape) >= params.min_octave_dim:
        levels = [img]
        for i in range(1, s + 3):
            # incremental blur to reach sigma * k**i from sigma * k**(i-1)
            sig_diff = params.sigma * k ** (i - 1) * np.sqrt(k * k - 1.0)
            levels.append(ndimage.gaussian_filter(levels[-1], sig_diff, mode="nearest"))
        octaves.append(np.stack(levels))
        nxt = levels[s]
        h, w = nxt.shape
        nxt = nxt[: h - h % 2, : w - w % 2]
        # 2x2 box average instead of decimation so that 90-degree rotations
        # of square frames see the same pixel lattice in every octave
        img = ((nxt[0::2, 0::2] + nxt[1::2, 1::2]) + (nxt[0::2, 1::2] + nxt[1::2, 0::2])) * 0.25
    return octaves


def _candidate_extrema(dog, prefilter):
    fp = np.ones((3, 3, 3), bool)
    fp[1, 1, 1] = False
    mx = ndimage.maximum_filter(dog, footprint=fp, mode="constant", cval=-np.inf)
    mn = ndimage.minimum_filter(dog, footprint=fp, mode="constant", cval=np.inf)
    ext = (np.abs(dog) > prefilter) & ((dog > mx) | (dog < mn))
    ext[0] = False
    ext[-1] = False
    ext[:, :_IMG_BORDER, :] = False
    ext[:, -_IMG_BORDER:, :] = False
    ext[:, :, :_IMG_BORDER] = False
    ext[:, :, -_IMG_BORDER:] = False
    return np.argwhere(ext)


def _refine_extremum(dog, layer, y, x, params):
    """Quadratic sub-pixel fit; None when the candidate drifts away or fails a test."""
    s = params.intervals
    _, h, w = dog.shape
    for _ in range(_MAX_INTERP_STEPS):
        cube = dog[layer - 1 : layer + 2, y - 1 : y + 2, x - 1 : x + 2]
        g = 0.5 * np.array(
            [
                cube[1, 1, 2] - cube[1, 1, 0],
                cube[1, 2, 1] - cube[1, 0, 1],
                cube[2, 1, 1] - cube[0, 1, 1],
            ]
        )
        c = cube[1, 1, 1]
        hxx = cube[1, 1, 2] + cube[1, 1, 0] - 2 * c
        hyy = cube[1, 2, 1] + cube[1, 0, 1] - 2 * c
        hss = cube[2, 1, 1] + cube[0, 1, 1] - 2 * c
        hxy = 0.25 * (cube[1, 2, 2] - cube[1, 2, 0] - cube[1, 0, 2] + cube[1, 0, 0])
        hxs = 0.25 * (cube[2, 1, 2] - cube[2, 1, 0] - cube[0, 1, 2] + cube[0, 1, 0])
        hys = 0.25 * (cube[2, 2, 1] - cube[2, 0, 1] - cube[0, 2, 1] + cube[0, 0, 1])
        hess = np.array([[hxx, hxy, hxs], [hxy, hyy, hys], [hxs, hys, hss]])
        try:
            offset = -np.linalg.solve(hess, g)
        except np.linalg.LinAlgError:
            return None
        if np.all(np.abs(offset) < 0.5):
            break
        x += int(round(offset[0]))
        y += int(round(offset[1]))
        layer += int(round(offset[2]))
        if not (
            1 <= layer <= s
            and _IMG_BORDER <= y < h - _IMG_BORDER
            and _IMG_BORDER <= x < w - _IMG_BORDER
        ):
            return None
    else:
        return None

    contrast = dog[layer, y, x] + 0.5 * float(g @ offset)
    if abs(contrast) < params.contrast_threshold:
        return None
    det = hxx * hyy - hxy * hxy
    tr = hxx + hyy
    r = params.edge_ratio
    if det <= 0 or tr * tr * r >= det * (r + 1) ** 2:
        return None
    return layer, y, x, offset, abs(contrast)


def _orientation_histogram(gauss, y, x, sigma_ori):
    radius = max(int(round(_ORI_RADIUS_FACTOR * sigma_ori)), 1)
    h, w = gauss.shape
    y0, y1 = max(y - radius, 1), min(y + radius, h - 2)
    x0, x1 = max(x - radius, 1), min(x + radius, w - 2)
    if y0 > y1 or x0 > x1:
        return None
    win = gauss[y0 - 1 : y1 + 2, x0 - 1 : x1 + 2]
    dx = 0.5 * (win[1:-1, 2:] - win[1:-1, :-2])
    dy = 0.5 * (win[2:, 1:-1] - win[:-2, 1:-1])
    mag = np.hypot(dx, dy)
    ang = np.arctan2(dy, dx) % (2 * np.pi)
    yy, xx = np.mgrid[y0 : y1 + 1, x0 : x1 + 1]
    wgt = np.exp(-((yy - y) ** 2 + (xx - x) ** 2) / (2 * sigma_ori**2))
    bins = (ang * _ORI_BINS / (2 * np.pi)).astype(np.int64) % _ORI_BINS
    hist = np.bincount(bins.ravel(), weights=(mag * wgt).ravel(), minlength=_ORI_BINS)
    kernel = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0
    return np.convolve(np.concatenate([hist[-2:], hist, hist[:2]]), kernel, mode="valid")


def _orientation_peaks(hist):
    mx = hist.max()
    if mx <= 0:
        return [0.0]
    n = len(hist)
    step = 2 * np.pi / n
    peaks = []
    for i in range(n):
        left, right = hist[(i - 1) % n], hist[(i + 1) % n]
        if hist[i] > left and hist[i] >= right and hist[i] >= _ORI_PEAK_RATIO * mx:
            denom = left - 2 * hist[i] + right
            shift = 0.5 * (left - right) / denom if denom != 0 else 0.0
            peaks.append(((i + shift) % n) * step)
    if not peaks:
        peaks.append(float(np.argmax(hist)) * step)
    return peaks


def detect_sift_keypoints(frame, params=DEFAULT_SIFT_PARAMS):
    """Scale-space DoG extrema with per-peak orientations.

    Returns keypoints in full-resolution coordinates, sorted by
    (y, x, scale, orientation) so the list order carries no trace of the
    octave-by-octave scan.
    """
    luma = frame.luma
    if min(luma.shape) < params.min_octave_dim:
        raise ValidationError(
            f"frame {luma.shape[1]}x{luma.shape[0]} below the "
            f"{params.min_octave_dim}px detection minimum"
        )
    s = params.intervals
    prefilter = 0.5 * params.contrast_threshold / s
    keypoints = []
    for octave, gauss in enumerate(_gaussian_pyramid(luma, params)):
        dog = gauss[1:] - gauss[:-1]
        up = 2**octave
        for layer, y, x in _candidate_extrema(dog, prefilter):
            if not 1 <= layer <= s:
                continue
            hit = _refine_extremum(dog, int(layer), int(y), int(x), params)
            if hit is None:
                continue
            layer_r, yr, xr, offset, response = hit
            scale_oct = params.sigma * 2.0 ** ((layer_r + offset[2]) / s)
            level = int(round(min(max(layer_r + offset[2], 0.0), s + 2)))
            hist = _orientation_histogram(gauss[level], yr, xr, _ORI_SIGMA_FACTOR * scale_oct)
            if hist is None:
                continue
            for theta in _orientation_peaks(hist):
                keypoints.append(
                    Keypoint(
                        x=(xr + offset[0]) * up,
                        y=(yr + offset[1]) * up,
                        scale=scale_oct * up,
                        orientation=float(theta),
                        response=float(response),
                    )
                )
    keypoints.sort(key=lambda p: (p.y, p.x, p.scale, p.orientation))
    return keypoints


def _sample(luma, yy, xx):
    h, w = luma.shape
    inside = (yy >= 0) & (yy < h) & (xx >= 0) & (xx < w)
    out = np.zeros(yy.shape)
    out[inside] = luma[yy[inside], xx[inside]]
    return out


def _descriptor_radius(scale):
    hist_width = _DESC_SCALE_FACTOR * scale
    return max(int(round(hist_width * (_DESC_GRID + 1) * np.sqrt(2) / 2)), 1)


def _sift_vector(luma, kp):
    d, n = _DESC_GRID, _DESC_ORI_BINS
    hist_width = _DESC_SCALE_FACTOR * kp.scale
    radius = _descriptor_radius(kp.scale)
    cos_t, sin_t = np.cos(kp.orientation), np.sin(kp.orientation)

    span = np.arange(-radius, radius + 1)
    jj, ii = np.meshgrid(span, span)  # jj: x offset, ii: y offset
    x_rot = (jj * cos_t + ii * sin_t) / hist_width
    y_rot = (-jj * sin_t + ii * cos_t) / hist_width
    rbin = y_rot + d / 2 - 0.5
    cbin = x_rot + d / 2 - 0.5

    py = int(round(kp.y)) + ii
    px = int(round(kp.x)) + jj
    gx = 0.5 * (_sample(luma, py, px + 1) - _sample(luma, py, px - 1))
    gy = 0.5 * (_sample(luma, py + 1, px) - _sample(luma, py - 1, px))
    mag = np.hypot(gx, gy)
    obin = ((np.arctan2(gy, gx) - kp.orientation) % (2 * np.pi)) * n / (2 * np.pi)
    weight = np.exp(-(x_rot**2 + y_rot**2) / (2 * (0.5 * d) ** 2))

    keep = (rbin > -1) & (rbin < d) & (cbin > -1) & (cbin < d) & (mag > 0)
    rbin, cbin, obin = rbin[keep], cbin[keep], obin[keep]
    val = (mag * weight)[keep]

    r0 = np.floor(rbin).astype(np.int64)
    c0 = np.floor(cbin).astype(np.int64)
    o0 = np.floor(obin).astype(np.int64) % n
    dr, dc, do = rbin - np.floor(rbin), cbin - np.floor(cbin), obin - np.floor(obin)

    hist = np.zeros((d + 2, d + 2, n))
    for ir in (0, 1):
        wr = dr if ir else 1 - dr
        for ic in (0, 1):
            wc = dc if ic else 1 - dc
            for io in (0, 1):
                wo = do if io else 1 - do
                np.add.at(
                    hist,
                    (r0 + ir + 1, c0 + ic + 1, (o0 + io) % n),
                    val * wr * wc * wo,
                )
    return finalize_descriptor(hist[1 : d + 1, 1 : d + 1].ravel())


def finalize_descriptor(vec):
    """Normalize, clamp at 0.2, renormalize. Zero vectors pass through."""
    norm = np.linalg.norm(vec)
    if norm == 0:
        return vec
    vec = np.minimum(vec / norm, _DESC_CLAMP)
    norm = np.linalg.norm(vec)
    return vec / norm if norm > 0 else vec


def describe_sift(frame, kp) -> LocalDescriptor:
    """128-d oriented gradient descriptor; zero vector on gradient-free support."""
    return LocalDescriptor(_sift_vector(frame.luma, kp), kp)


def describe_huesift(frame, kp) -> LocalDescriptor:
    """Base descriptor plus a 36-bin hue histogram of the support patch.

    The hue block counts only chromatic pixels (saturation at or above
    the shared achromatic cutoff) and falls back to uniform when the
    patch carries no usable hue, mirroring the global hue histogram.
    """
    base = _sift_vector(frame.luma, kp)
    radius = _descriptor_radius(kp.scale)
    h, w = frame.luma.shape
    y0, y1 = max(int(round(kp.y)) - radius, 0), min(int(round(kp.y)) + radius, h - 1)
    x0, x1 = max(int(round(kp.x)) - radius, 0), min(int(round(kp.x)) + radius, w - 1)
    hue, sat = hue_and_saturation(frame.rgb[y0 : y1 + 1, x0 : x1 + 1])
    chromatic = sat >= ACHROMATIC_SATURATION
    if chromatic.any():
        idx = np.minimum(
            (hue[chromatic] / 360.0 * HUE_PATCH_BINS).astype(np.int64), HUE_PATCH_BINS - 1
        )
        hue_hist = np.bincount(idx, minlength=HUE_PATCH_BINS).astype(np.float64)
        hue_hist /= hue_hist.sum()
    else:
        hue_hist = np.full(HUE_PATCH_BINS, 1.0 / HUE_PATCH_BINS)
    return LocalDescriptor(np.concatenate([base, hue_hist]), kp)


@dataclass(frozen=True)
class PcaProjection:
    """Orthonormal projection fit on a descriptor sample, mean removed."""

    mean: np.ndarray  # (dim,)
    components: np.ndarray  # (target_dim, dim), rows orthonormal
    variances: np.ndarray  # per-component training variance, descending

    @property
    def target_dim(self):
        return self.components.shape[0]


def project_pca_sift(training, target_dim=PCA_DIM) -> PcaProjection:
    """Fit the top-`target_dim` principal components of a descriptor set.

    A rank-deficient sample (rank below target_dim) still yields
    orthonormal components: the tail rows come from the SVD's null-space
    basis, and a warning flags that they are arbitrary.
    """
    if isinstance(training, np.ndarray):
        vecs = np.asarray(training, dtype=np.float64)
    else:
        vecs = np.asarray([d.vector for d in training], dtype=np.float64)
    if vecs.ndim != 2 or len(vecs) < target_dim:
        raise ValidationError(
            f"need at least {target_dim} descriptors to fit the projection, got {len(vecs)}"
        )
    mean = vecs.mean(axis=0)
    _, svals, vt = np.linalg.svd(vecs - mean, full_matrices=True)
    variances = np.zeros(vecs.shape[1])
    variances[: len(svals)] = svals**2 / (len(vecs) - 1)
    tol = svals[0] * max(vecs.shape) * np.finfo(np.float64).eps if svals[0] > 0 else 0.0
    rank = int((svals > tol).sum())
    if rank < target_dim:
        warnings.warn(
            f"descriptor sample has rank {rank} < {target_dim}; "
            "trailing components are an arbitrary orthonormal completion",
            RuntimeWarning,
            stacklevel=2,
        )
    return PcaProjection(mean, vt[:target_dim].copy(), variances[:target_dim])


def apply_pca(proj: PcaProjection, d: LocalDescriptor) -> LocalDescriptor:
    vec = (np.asarray(d.vector, dtype=np.float64) - proj.mean) @ proj.components.T
    return LocalDescriptor(vec, d.anchor)


def project_descriptor_matrix(proj: PcaProjection, matrix):
    """apply_pca over the rows of an (n, dim) matrix; handles n = 0."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.shape[0] == 0:
        return np.empty((0, proj.target_dim))
    return (matrix - proj.mean) @ proj.components.T
