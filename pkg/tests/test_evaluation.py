from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vidvote.classify import ElementFeature, VideoDecision
from vidvote.config import (
    KEYFRAME,
    SHOT,
    STIP,
    HUE_HIST,
    ChannelSpec,
    PipelineConfig,
)
from vidvote.errors import ConfigError, ValidationError
from vidvote.evaluation import (
    EvalReport,
    FoldPlan,
    RunResult,
    confusion_from_decisions,
    make_folds,
    run_cross_validation,
)
from vidvote.features import DenseFeature
from vidvote.manifest import NEGATIVE, POSITIVE, DatasetManifest, ManifestEntry
from vidvote.pipeline import VideoExtraction
from vidvote.stats import ConfusionMatrix


def toy_manifest(n_pos, n_neg):
    entries = [ManifestEntry(f"p{i:03d}", f"p{i:03d}.y4m", POSITIVE) for i in range(n_pos)]
    entries += [ManifestEntry(f"n{i:03d}", f"n{i:03d}.y4m", NEGATIVE) for i in range(n_neg)]
    return DatasetManifest(entries)


# -------------------------------------------------------------- fold plans


def test_balanced_800_split():
    plan = make_folds(toy_manifest(400, 400), k=5, seed=0)
    per_fold = Counter(plan.assignments.values())
    assert all(per_fold[f] == 160 for f in range(5))
    for f in range(5):
        pos = sum(1 for v, fold in plan.assignments.items() if fold == f and v.startswith("p"))
        assert pos == 80
    m = toy_manifest(400, 400)
    assert len(plan.training_ids(m, 0)) == 640
    assert len(plan.test_ids(m, 0)) == 160


def test_ten_videos_five_folds():
    plan = make_folds(toy_manifest(5, 5), k=5, seed=3)
    for f in range(5):
        members = [v for v, fold in plan.assignments.items() if fold == f]
        assert len(members) == 2
        assert sum(1 for v in members if v.startswith("p")) == 1


def test_seed_changes_assignment_not_sizes():
    m = toy_manifest(20, 20)
    a = make_folds(m, k=5, seed=1)
    b = make_folds(m, k=5, seed=2)
    assert a.assignments != b.assignments
    assert Counter(a.assignments.values()) == Counter(b.assignments.values())
    assert make_folds(m, k=5, seed=1).assignments == a.assignments


def test_small_class_rejected():
    with pytest.raises(ValidationError, match="fewer than"):
        make_folds(toy_manifest(3, 10), k=5)


@settings(max_examples=30, deadline=None)
@given(
    n_pos=st.integers(2, 40),
    n_neg=st.integers(2, 40),
    k=st.integers(2, 6),
    seed=st.integers(0, 1000),
)
def test_folds_partition_and_stratify(n_pos, n_neg, k, seed):
    if min(n_pos, n_neg) < k:
        return
    m = toy_manifest(n_pos, n_neg)
    plan = make_folds(m, k=k, seed=seed)
    assert set(plan.assignments) == {e.video_id for e in m.entries}
    for label, total in (("p", n_pos), ("n", n_neg)):
        sizes = Counter(
            fold for v, fold in plan.assignments.items() if v.startswith(label)
        )
        counts = [sizes.get(f, 0) for f in range(k)]
        assert sum(counts) == total
        assert max(counts) - min(counts) <= 1
    for fold in range(k):
        train = set(plan.training_ids(m, fold))
        test = set(plan.test_ids(m, fold))
        assert train | test == set(plan.assignments)
        assert not (train & test)


def test_fold_plan_validates_indices():
    with pytest.raises(ValidationError):
        FoldPlan(k=1, assignments={}, seed=0)
    with pytest.raises(ValidationError):
        FoldPlan(k=2, assignments={"v": 5}, seed=0)


# ------------------------------------------------- cross-validation driver


def hue_config(**overrides):
    return PipelineConfig(
        channels=(ChannelSpec("hue4", HUE_HIST, KEYFRAME, bins=4),),
        folds=3,
        **overrides,
    )


def separable_extractions(manifest, seed=0):
    """One 4-bin histogram per video: positives peak in bin 0, negatives in bin 2."""
    rng = np.random.default_rng(seed)
    out = {}
    for e in manifest.entries:
        peak = 0 if e.label == POSITIVE else 2
        vec = rng.uniform(0.0, 0.05, 4)
        vec[peak] += 1.0
        vec /= vec.sum()
        feature = DenseFeature("hue4", vec)
        out[e.video_id] = VideoExtraction(
            video_id=e.video_id,
            frame_count=10,
            dense=(ElementFeature("hue4", (KEYFRAME, 0), feature),),
            local={},
        )
    return out


def test_separable_corpus_perfect_folds():
    manifest = toy_manifest(9, 9)
    result = run_cross_validation(
        manifest, hue_config(), extractions=separable_extractions(manifest)
    )
    assert result.configuration_id == "hue4"
    assert len(result.fold_matrices) == 3
    assert np.all(result.tprs == 1.0)
    assert np.all(result.fprs == 0.0)
    assert np.all(result.accuracies == 1.0)
    mean = result.mean_matrix
    assert (mean.tp, mean.fn, mean.fp, mean.tn) == (3.0, 0.0, 0.0, 3.0)


def test_cross_validation_deterministic():
    manifest = toy_manifest(6, 6)
    ext = separable_extractions(manifest)
    a = run_cross_validation(manifest, hue_config(), extractions=ext)
    b = run_cross_validation(manifest, hue_config(), extractions=ext)
    assert a.configuration_id == b.configuration_id
    for cm_a, cm_b in zip(a.fold_matrices, b.fold_matrices):
        assert (cm_a.tp, cm_a.fn, cm_a.fp, cm_a.tn) == (cm_b.tp, cm_b.fn, cm_b.fp, cm_b.tn)


def test_empty_channel_subset_rejected():
    manifest = toy_manifest(6, 6)
    with pytest.raises(ConfigError, match="subset"):
        run_cross_validation(
            manifest, hue_config(), channel_subset=[], extractions=separable_extractions(manifest)
        )


def test_named_subset_selects_channel():
    manifest = toy_manifest(6, 6)
    result = run_cross_validation(
        manifest,
        hue_config(),
        channel_subset=["hue4"],
        extractions=separable_extractions(manifest),
    )
    assert result.configuration_id == "hue4"


def test_pipeline_error_carries_fold_index():
    manifest = toy_manifest(6, 6)
    config = PipelineConfig(
        channels=(ChannelSpec("stip", STIP, SHOT, codebook_k=2),),
        folds=3,
    )
    # every video yields zero spatiotemporal descriptors, so codebook
    # training must fail inside fold 0
    extractions = {
        e.video_id: VideoExtraction(
            video_id=e.video_id,
            frame_count=10,
            dense=(),
            local={"stip": (((SHOT, 0), np.empty((0, 162))),)},
        )
        for e in manifest.entries
    }
    with pytest.raises(ValidationError, match="fold 0"):
        run_cross_validation(manifest, config, extractions=extractions)


# ------------------------------------------------------------- aggregation


def test_confusion_from_decisions_hand_count():
    labels = {"a": 1, "b": 1, "c": -1, "d": -1, "e": -1}
    decisions = [
        VideoDecision("a", label=1),
        VideoDecision("b", label=-1),
        VideoDecision("c", label=1),
        VideoDecision("d", label=-1),
        VideoDecision("e", label=-1),
    ]
    cm = confusion_from_decisions(labels, decisions)
    assert (cm.tp, cm.fn, cm.fp, cm.tn) == (1, 1, 1, 2)


def test_run_result_requires_folds():
    with pytest.raises(ValidationError):
        RunResult("x", ())


def test_eval_report_requires_results():
    with pytest.raises(ValidationError):
        EvalReport(results=())
    report = EvalReport(results=(RunResult("x", (ConfusionMatrix(1, 0, 0, 1),)),))
    assert report.alpha == 0.05
