"""Temporal structure: shot boundaries, middle frames, and keyframe summaries.

Shot detection is histogram-difference thresholding: a cut is declared
between consecutive frames when the L1 distance of their 64-bin RGB
histograms exceeds the threshold, and cuts that would start a shot
shorter than min_shot_len are suppressed.

Keyframe extraction follows the classic summarization recipe: sample one
frame per second, describe samples by a coarse hue histogram, estimate
the cluster count from consecutive-sample distances, k-means the samples
and keep each cluster's most central frame, then drop near-duplicate
keyframes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codebook import lloyd_kmeans
from .color import hue_histogram, rgb_histogram
from .video_io import FrameSequence

SHOT_HIST_BINS_PER_AXIS = 4  # 64-bin RGB histograms drive cut detection
DEFAULT_CUT_THRESHOLD = 0.5
DEFAULT_MIN_SHOT_LEN = 10


@dataclass(frozen=True)
class Shot:
    start_frame: int  # inclusive
    end_frame: int    # inclusive

    def __post_init__(self):
        if self.start_frame > self.end_frame or self.start_frame < 0:
            raise ValueError(f"bad shot range [{self.start_frame}, {self.end_frame}]")

    def __len__(self):
        return self.end_frame - self.start_frame + 1


@dataclass(frozen=True)
class KeyframeSet:
    keyframe_indices: tuple[int, ...]
    source_frame_count: int

    def __post_init__(self):
        idx = self.keyframe_indices
        if not idx:
            raise ValueError("keyframe set must be non-empty")
        if any(b <= a for a, b in zip(idx, idx[1:])) or idx[-1] >= self.source_frame_count:
            raise ValueError(f"keyframe indices not strictly increasing in range: {idx}")


@dataclass(frozen=True)
class KeyframeStats:
    keyframe_count: int
    keyframe_ratio: float  # in (0, 1]

    @property
    def vector(self):
        return np.array([float(self.keyframe_count), self.keyframe_ratio])


@dataclass(frozen=True)
class SummarizerParams:
    stride_seconds: float = 1.0
    hue_bins: int = 16
    dedup_min_distance: float = 0.1
    kmeans_max_iter: int = 50
    seed: int = 0


def frame_histograms(video: FrameSequence):
    """(T, 64) matrix of per-frame L1-normalized RGB histograms."""
    return np.stack(
        [rgb_histogram(video[t], SHOT_HIST_BINS_PER_AXIS).values for t in range(len(video))]
    )


def detect_shots(
    video: FrameSequence,
    threshold=DEFAULT_CUT_THRESHOLD,
    min_shot_len=DEFAULT_MIN_SHOT_LEN,
) -> list[Shot]:
    """Partition the video into shots at abrupt histogram changes."""
    if not 0 < threshold <= 2:
        raise ValueError(f"threshold must be in (0, 2], got {threshold}")
    if min_shot_len < 1:
        raise ValueError(f"min_shot_len must be >= 1, got {min_shot_len}")
    hists = frame_histograms(video)
    dists = np.abs(np.diff(hists, axis=0)).sum(1)
    starts = [0]
    for t, d in enumerate(dists):
        if d > threshold and (t + 1) - starts[-1] >= min_shot_len:
            starts.append(t + 1)
    starts.append(len(video))
    return [Shot(a, b - 1) for a, b in zip(starts, starts[1:])]


def middle_frame(shot: Shot) -> int:
    """Middle frame index; even-length shots round down."""
    return (shot.start_frame + shot.end_frame) // 2


def extract_keyframes(video: FrameSequence, params=SummarizerParams()) -> KeyframeSet:
    """Keyframes by hue-histogram clustering of a 1-per-second frame sample."""
    stride = max(1, round(video.frame_rate * params.stride_seconds))
    sampled = list(range(0, len(video), stride)) or [0]
    hists = np.stack([hue_histogram(video[t], params.hue_bins).values for t in sampled])

    if len(sampled) > 1:
        dists = np.abs(np.diff(hists, axis=0)).sum(1)
        # above-mean jumps mark scene boundaries; segments = boundaries + 1
        k = int((dists > dists.mean()).sum()) + 1
    else:
        k = 1
    n_distinct = np.unique(hists, axis=0).shape[0]
    k = max(1, min(k, n_distinct))

    centroids, labels, _ = lloyd_kmeans(hists, k, params.seed, params.kmeans_max_iter)
    candidates = []
    for j in range(k):
        members = np.flatnonzero(labels == j)
        if members.size == 0:
            continue
        d2 = ((hists[members] - centroids[j]) ** 2).sum(1)
        candidates.append(sampled[members[int(d2.argmin())]])

    keep = []
    for idx in sorted(candidates):
        h = hists[sampled.index(idx)]
        if all(
            np.abs(h - hists[sampled.index(other)]).sum() >= params.dedup_min_distance
            for other in keep
        ):
            keep.append(idx)
    return KeyframeSet(tuple(keep), len(video))


def keyframe_statistics(ks: KeyframeSet) -> KeyframeStats:
    count = len(ks.keyframe_indices)
    return KeyframeStats(count, count / ks.source_frame_count)
