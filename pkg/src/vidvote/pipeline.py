"""Per-video feature extraction and per-fold channel training.

Extraction is a pure function of one video plus the config, so videos
fan out to a process pool and merge back in manifest order. Everything
that must not see test data (descriptor sampling, codebook and PCA
fitting, class balancing, classifier training) takes an explicit list
of training video ids and iterates it in manifest order, so a fold's
artifacts are a deterministic function of (training split, config seed)
and nothing else.

Local-descriptor channels are extracted as raw per-element descriptor
matrices and encoded later against each fold's codebook. The PCA-SIFT
channel stores plain 128-d descriptors; the projection is fit per fold
on the training sample and applied at encode time.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import config as cfg
from .classify import (
    ChannelModel,
    ElementFeature,
    TrainingExample,
    balance_training_set,
    classify_video,
    train_linear_svm,
)
from .codebook import Codebook, encode_bovf, sample_descriptors, train_codebook
from .color import hue_histogram, rgb_histogram, rgb_levels_for_bins
from .errors import ConfigError, ValidationError
from .features import DenseFeature
from .segmentation import detect_shots, extract_keyframes, keyframe_statistics, middle_frame
from .sift import (
    HUESIFT_DIM,
    SIFT_DIM,
    PcaProjection,
    describe_huesift,
    describe_sift,
    detect_sift_keypoints,
    project_pca_sift,
    project_descriptor_matrix,
)
from .stip import STIP_DIM, describe_stip, detect_stips
from .video_io import decode_video
from .zernike import zernike_moments


@dataclass(frozen=True)
class VideoExtraction:
    """Everything extracted from one video, before any codebook exists."""

    video_id: str
    frame_count: int
    dense: tuple  # ElementFeature entries, ready for classification
    local: dict  # channel_id -> tuple of (element_ref, (n, dim) descriptor matrix)


def _derive_seed(config_seed, fold_index, channel_index, purpose):
    """Stable child seed; depends only on config seed and position, never on data."""
    ss = np.random.SeedSequence((int(config_seed), int(fold_index), int(channel_index), purpose))
    return int(ss.generate_state(1)[0])


def _frame_elements(granularity, shots, keyframes):
    if granularity == cfg.MIDDLE_FRAME:
        return [((cfg.MIDDLE_FRAME, i), middle_frame(s)) for i, s in enumerate(shots)]
    return [((cfg.KEYFRAME, i), idx) for i, idx in enumerate(keyframes.keyframe_indices)]


def extract_video_features(video, config) -> VideoExtraction:
    channels = config.channels
    granularities = {c.granularity for c in channels}
    shots = (
        detect_shots(video, config.shot_threshold, config.min_shot_len)
        if granularities & {cfg.MIDDLE_FRAME, cfg.SHOT}
        else []
    )
    keyframes = (
        extract_keyframes(video, config.summarizer)
        if cfg.KEYFRAME in granularities or any(c.kind == cfg.KEYFRAME_STATS for c in channels)
        else None
    )

    keypoint_cache = {}

    def frame_keypoints(idx):
        if idx not in keypoint_cache:
            frame = video[idx]
            keypoint_cache[idx] = (frame, detect_sift_keypoints(frame, config.sift))
        return keypoint_cache[idx]

    stip_state = {}

    def stips():
        if not stip_state:
            points = detect_stips(
                video, config.stip.scales, config.stip.k_harris, config.stip.threshold
            )
            rows = [
                describe_stip(video, p, config.stip.flow_window, config.stip.flow_iters).vector
                for p in points
            ]
            stip_state["points"] = points
            stip_state["descs"] = np.array(rows) if rows else np.empty((0, STIP_DIM))
        return stip_state["points"], stip_state["descs"]

    dense = []
    local = {}
    for spec in channels:
        if spec.kind == cfg.KEYFRAME_STATS:
            stats = keyframe_statistics(keyframes)
            dense.append(
                ElementFeature(
                    spec.channel_id, (cfg.VIDEO, 0), DenseFeature("keyframe_stats", stats.vector)
                )
            )
        elif spec.kind in (cfg.RGB_HIST, cfg.HUE_HIST, cfg.ZERNIKE):
            for ref, idx in _frame_elements(spec.granularity, shots, keyframes):
                frame = video[idx]
                if spec.kind == cfg.RGB_HIST:
                    feat = rgb_histogram(frame, rgb_levels_for_bins(spec.bins))
                elif spec.kind == cfg.HUE_HIST:
                    feat = hue_histogram(frame, spec.bins)
                else:
                    feat = zernike_moments(frame, spec.zernike_count)
                dense.append(ElementFeature(spec.channel_id, ref, feat))
        elif spec.kind in (cfg.SIFT, cfg.HUESIFT, cfg.PCASIFT):
            describe = describe_huesift if spec.kind == cfg.HUESIFT else describe_sift
            dim = HUESIFT_DIM if spec.kind == cfg.HUESIFT else SIFT_DIM
            groups = []
            for ref, idx in _frame_elements(spec.granularity, shots, keyframes):
                frame, kps = frame_keypoints(idx)
                if kps:
                    vectors = np.array([describe(frame, kp).vector for kp in kps])
                else:
                    vectors = np.empty((0, dim))
                groups.append((ref, vectors))
            local[spec.channel_id] = tuple(groups)
        else:  # STIP
            points, descs = stips()
            if spec.granularity == cfg.VIDEO:
                local[spec.channel_id] = (((cfg.VIDEO, 0), descs),)
            else:
                times = np.array([p.t for p in points], dtype=np.int64)
                groups = []
                for i, shot in enumerate(shots):
                    if len(points):
                        mask = (times >= shot.start_frame) & (times <= shot.end_frame)
                        groups.append(((cfg.SHOT, i), descs[mask]))
                    else:
                        groups.append(((cfg.SHOT, i), descs))
                local[spec.channel_id] = tuple(groups)
    return VideoExtraction(video.video_id, video.frame_count, tuple(dense), local)


def _extract_worker(args):
    video_id, path, config = args
    video = decode_video(path)
    if video.video_id != video_id:
        video = replace(video, video_id=video_id)
    return extract_video_features(video, config)


def parallel_map(fn, items, jobs=0):
    """Order-preserving map over a process pool; jobs <= 0 means one per CPU."""
    items = list(items)
    if jobs is None or jobs <= 0:
        jobs = os.cpu_count() or 1
    if jobs == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    workers = min(jobs, len(items))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (workers * 4))))


def extract_manifest_features(manifest, config, jobs=None) -> dict:
    """video_id -> VideoExtraction for every manifest entry, manifest order."""
    jobs = config.jobs if jobs is None else jobs
    results = parallel_map(
        _extract_worker, [(e.video_id, e.path, config) for e in manifest.entries], jobs
    )
    return {r.video_id: r for r in results}


@dataclass(frozen=True)
class ChannelState:
    """One channel's trained fold artifacts."""

    spec: object
    model: ChannelModel
    codebook: Codebook = None
    projection: PcaProjection = None


def _encode_channel(state: ChannelState, element_matrices):
    """BoVF features for one video's elements under one channel's artifacts."""
    out = []
    for ref, matrix in element_matrices:
        if state.projection is not None:
            matrix = project_descriptor_matrix(state.projection, matrix)
        out.append(ElementFeature(state.spec.channel_id, ref, encode_bovf(state.codebook, matrix)))
    return out


def build_channel_codebooks(extractions, training_ids, config, fold_index=0) -> dict:
    """channel_id -> (codebook, projection) for every bag-of-features channel.

    Samples descriptors by streaming the training videos in the given id
    order, so the result is bit-stable against anything outside that list.
    """
    built = {}
    for channel_index, spec in enumerate(config.channels):
        if spec.kind not in cfg.BOVF_KINDS:
            continue
        seed = lambda purpose: _derive_seed(config.seed, fold_index, channel_index, purpose)
        batches = []
        for vid in training_ids:
            for _, matrix in extractions[vid].local[spec.channel_id]:
                if len(matrix):
                    batches.append(matrix)
        budget = config.codebook_budget_factor * spec.codebook_k
        sample = sample_descriptors(batches, budget, seed(0), spec.channel_id)
        projection = None
        if spec.kind == cfg.PCASIFT:
            projection = project_pca_sift(sample.descriptors)
            sample = replace(
                sample, descriptors=project_descriptor_matrix(projection, sample.descriptors)
            )
        codebook = train_codebook(sample, spec.codebook_k, config.codebook_max_iter, seed(1))
        built[spec.channel_id] = (codebook, projection)
    return built


def train_channel_states(extractions, labels, training_ids, config, fold_index=0, codebooks=None):
    """Fit codebooks, projections, and classifiers on the training split only.

    `extractions` may contain test videos; they are never touched. Pass a
    prebuilt `codebooks` dict (as from build_channel_codebooks, or loaded
    from disk) to skip the codebook stage.
    """
    if codebooks is None:
        codebooks = build_channel_codebooks(extractions, training_ids, config, fold_index)
    states = []
    for channel_index, spec in enumerate(config.channels):
        seed = lambda purpose: _derive_seed(config.seed, fold_index, channel_index, purpose)
        codebook = None
        projection = None
        if spec.kind in cfg.BOVF_KINDS:
            if spec.channel_id not in codebooks:
                raise ConfigError(
                    f"channel {spec.channel_id!r}: no codebook available; "
                    "run the codebook subcommand first"
                )
            codebook, projection = codebooks[spec.channel_id]
            helper = ChannelState(spec, model=None, codebook=codebook, projection=projection)
            examples = []
            for vid in training_ids:
                for ef in _encode_channel(helper, extractions[vid].local[spec.channel_id]):
                    if not ef.feature.is_empty:
                        examples.append(
                            TrainingExample(ef.feature.values, labels[vid], vid, ef.element_ref)
                        )
        else:
            examples = [
                TrainingExample(
                    np.asarray(ef.feature.values, dtype=np.float64),
                    labels[vid],
                    vid,
                    ef.element_ref,
                )
                for vid in training_ids
                for ef in extractions[vid].dense
                if ef.channel_id == spec.channel_id
            ]
        if not examples:
            raise ValidationError(
                f"channel {spec.channel_id!r}: no usable training examples in this split"
            )
        balanced = balance_training_set(examples, seed(2))
        model = train_linear_svm(
            balanced, config.svm_c, config.svm_epochs, seed(3), spec.channel_id
        )
        states.append(ChannelState(spec, model, codebook, projection))
    return states


def video_element_features(extraction: VideoExtraction, states) -> list:
    """All classifiable element features of one video, in channel order."""
    features = []
    for state in states:
        if state.spec.kind in cfg.BOVF_KINDS:
            features.extend(_encode_channel(state, extraction.local[state.spec.channel_id]))
        else:
            features.extend(
                ef for ef in extraction.dense if ef.channel_id == state.spec.channel_id
            )
    return features


def classify_extraction(extraction: VideoExtraction, states, normalize_channels=False):
    models = [state.model for state in states]
    return classify_video(
        models,
        extraction.video_id,
        video_element_features(extraction, states),
        normalize_channels=normalize_channels,
    )
