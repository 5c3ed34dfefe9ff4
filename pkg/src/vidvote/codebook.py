"""Visual vocabulary learning and bag-of-visual-features encoding.

The clustering engine is plain Lloyd iteration with k-means++ seeding and
Euclidean distance. Empty clusters are re-seeded to the point currently
farthest from its own centroid, which keeps the within-cluster sum of
squares non-increasing across iterations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

DEFAULT_MAX_ITER = 100

# Descriptor rows per chunk in the assignment step, sized so the chunk
# distance matrix stays modest even for k=5000 codebooks.
_ASSIGN_CHUNK_CELLS = 4_000_000


@dataclass(frozen=True)
class Codebook:
    """k centroid vectors defining one channel's visual vocabulary."""

    channel_id: str
    centroids: np.ndarray  # (k, dim) float64
    seed: int

    def __post_init__(self):
        c = self.centroids
        if c.ndim != 2 or c.shape[0] < 2:
            raise ValidationError(f"{self.channel_id}: codebook needs k >= 2 centroids")
        if not np.isfinite(c).all():
            raise ValidationError(f"{self.channel_id}: non-finite centroid")
        if np.unique(c, axis=0).shape[0] != c.shape[0]:
            raise ValidationError(f"{self.channel_id}: duplicate centroids")

    @property
    def k(self):
        return self.centroids.shape[0]

    @property
    def dim(self):
        return self.centroids.shape[1]


@dataclass(frozen=True)
class BovfHistogram:
    """Normalized word-count histogram of one element's descriptors.

    An element with no descriptors yields the all-zero vector with the
    empty flag set; such histograms are evidence-free and are excluded
    from training and voting.
    """

    channel_id: str
    values: np.ndarray
    descriptor_count: int

    def __post_init__(self):
        if self.descriptor_count > 0:
            s = self.values.sum()
            if not (self.values >= 0).all() or abs(s - 1.0) > 1e-9:
                raise ValidationError(f"{self.channel_id}: BoVF not normalized (sum {s})")
        elif self.values.any():
            raise ValidationError(f"{self.channel_id}: empty BoVF must be all-zero")

    @property
    def is_empty(self):
        return self.descriptor_count == 0


@dataclass(frozen=True)
class DescriptorSample:
    channel_id: str
    descriptors: np.ndarray  # (n, dim) float64
    seed: int


def sample_descriptors(batches, budget, seed, channel_id="") -> DescriptorSample:
    """Uniform reservoir sample (Algorithm R) over a stream of descriptor batches.

    Each batch is an (m, dim) array; the stream is typically one batch per
    training video. Deterministic under seed. The acceptance draws are
    vectorized per batch but applied in stream order, so the result is
    distributed exactly as the classic one-row-at-a-time reservoir.
    """
    rng = np.random.default_rng(seed)
    reservoir = None
    count = 0
    for batch in batches:
        batch = np.asarray(batch, np.float64)
        if batch.size == 0:
            continue
        if reservoir is None:
            reservoir = np.empty((budget, batch.shape[1]))
        m = batch.shape[0]
        take = min(max(budget - count, 0), m)
        if take:
            reservoir[count : count + take] = batch[:take]
        if take < m:
            stream_idx = np.arange(count + take, count + m)
            j = rng.integers(0, stream_idx + 1)  # Algorithm R draw per item
            for offset in np.flatnonzero(j < budget):
                reservoir[j[offset]] = batch[take + offset]
        count += m
    if count == 0:
        raise ValidationError(f"{channel_id or 'channel'}: no descriptors to sample")
    return DescriptorSample(channel_id, reservoir[: min(count, budget)].copy(), seed)


def _assign(points, centroids):
    """Nearest-centroid labels and squared distances, chunked GEMM form."""
    n, k = points.shape[0], centroids.shape[0]
    labels = np.empty(n, np.int64)
    dmin = np.empty(n)
    c_sq = (centroids**2).sum(1)
    step = max(1, _ASSIGN_CHUNK_CELLS // k)
    for s in range(0, n, step):
        chunk = points[s : s + step]
        d2 = (chunk**2).sum(1)[:, None] - 2.0 * (chunk @ centroids.T) + c_sq
        labels[s : s + step] = d2.argmin(1)
        dmin[s : s + step] = np.maximum(d2[np.arange(len(chunk)), labels[s : s + step]], 0.0)
    return labels, dmin


def _kmeanspp_seed(points, k, rng):
    n = points.shape[0]
    chosen = np.empty(k, np.int64)
    chosen[0] = rng.integers(n)
    d2 = ((points - points[chosen[0]]) ** 2).sum(1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0:
            # all remaining mass is on already-covered points
            unchosen = np.setdiff1d(np.arange(n), chosen[:j])
            chosen[j] = unchosen[rng.integers(len(unchosen))]
        else:
            draw = np.searchsorted(np.cumsum(d2 / total), rng.random())
            chosen[j] = min(draw, n - 1)
        d2 = np.minimum(d2, ((points - points[chosen[j]]) ** 2).sum(1))
    return points[chosen].copy()


def _cluster_means(points, labels, k):
    n, dim = points.shape
    counts = np.bincount(labels, minlength=k)
    order = np.argsort(labels, kind="stable")
    # zero pad row keeps reduceat in-bounds when trailing clusters are empty
    padded = np.concatenate([points[order], np.zeros((1, dim))])
    starts = np.searchsorted(labels[order], np.arange(k))
    sums = np.add.reduceat(padded, starts, axis=0)
    sums[counts == 0] = 0.0
    return sums / np.maximum(counts, 1)[:, None], counts


def lloyd_kmeans(points, k, seed, max_iter=DEFAULT_MAX_ITER):
    """k-means. Returns (centroids, labels, sse_history).

    sse_history holds the within-cluster sum of squares measured after
    each assignment step; it is non-increasing by construction.
    """
    points = np.asarray(points, np.float64)
    n = points.shape[0]
    if n < k:
        raise ValidationError(f"k-means needs >= k points, got {n} < {k}")
    rng = np.random.default_rng(seed)
    centroids = _kmeanspp_seed(points, k, rng)
    history = []
    labels = prev = None
    for _ in range(max_iter):
        labels, dmin = _assign(points, centroids)
        history.append(float(dmin.sum()))
        if prev is not None and (labels == prev).all():
            break
        prev = labels
        centroids, counts = _cluster_means(points, labels, k)
        empties = np.flatnonzero(counts == 0)
        if empties.size:
            spread = dmin.copy()
            for j in empties:
                far = int(spread.argmax())
                centroids[j] = points[far]
                spread[far] = -np.inf
    return centroids, labels, history


def train_codebook(sample: DescriptorSample, k, max_iter=DEFAULT_MAX_ITER, seed=0) -> Codebook:
    """Cluster a descriptor sample into a k-word codebook."""
    if sample.descriptors.shape[0] < k:
        raise ValidationError(
            f"{sample.channel_id}: sample of {sample.descriptors.shape[0]} "
            f"descriptors cannot seed k={k}"
        )
    centroids, _, _ = lloyd_kmeans(sample.descriptors, k, seed, max_iter)
    return Codebook(sample.channel_id, centroids, seed)


def assign_word(cb: Codebook, descriptor) -> int:
    """Index of the Euclidean-nearest centroid; ties go to the lowest index."""
    v = np.asarray(getattr(descriptor, "vector", descriptor), np.float64)
    if v.shape != (cb.dim,):
        raise ValueError(f"descriptor dim {v.shape} does not match codebook dim {cb.dim}")
    d2 = ((cb.centroids - v) ** 2).sum(1)
    return int(d2.argmin())


def encode_bovf(cb: Codebook, descriptors) -> BovfHistogram:
    """Encode a descriptor set as an L1-normalized word histogram."""
    if isinstance(descriptors, (list, tuple)):
        rows = [np.asarray(getattr(d, "vector", d), np.float64) for d in descriptors]
        mat = np.stack(rows) if rows else np.empty((0, cb.dim))
    else:
        mat = np.asarray(descriptors, np.float64).reshape(-1, cb.dim)
    if mat.shape[0] == 0:
        return BovfHistogram(cb.channel_id, np.zeros(cb.k), 0)
    if mat.shape[1] != cb.dim:
        raise ValueError(f"descriptor dim {mat.shape[1]} does not match codebook dim {cb.dim}")
    labels, _ = _assign(mat, cb.centroids)
    counts = np.bincount(labels, minlength=cb.k).astype(np.float64)
    return BovfHistogram(cb.channel_id, counts / counts.sum(), mat.shape[0])
