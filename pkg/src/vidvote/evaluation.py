"""Cross-validation protocol: stratified folds, per-fold confusion matrices.

Folds are stratified by label so every fold carries its share of both
classes (an 800-video balanced manifest under k=5 gives exactly 640
training and 160 test videos per fold). Codebooks and models are
retrained from scratch inside every fold on that fold's training split;
nothing trained ever sees a test video.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .pipeline import classify_extraction, extract_manifest_features, train_channel_states
from .stats import ConfusionMatrix

DEFAULT_FOLDS = 5


@dataclass(frozen=True)
class FoldPlan:
    k: int
    assignments: dict  # video_id -> fold index
    seed: int

    def __post_init__(self):
        if self.k < 2:
            raise ValidationError("fold plan needs k >= 2")
        bad = {v: f for v, f in self.assignments.items() if not 0 <= f < self.k}
        if bad:
            raise ValidationError(f"fold indices out of range: {bad}")

    def test_ids(self, manifest, fold):
        return [e.video_id for e in manifest.entries if self.assignments[e.video_id] == fold]

    def training_ids(self, manifest, fold):
        return [e.video_id for e in manifest.entries if self.assignments[e.video_id] != fold]


def make_folds(manifest, k=DEFAULT_FOLDS, seed=0) -> FoldPlan:
    """Stratified random fold assignment; per-class fold sizes differ by <= 1."""
    manifest.require_both_labels()
    rng = np.random.default_rng(seed)
    assignments = {}
    for label in sorted({e.label for e in manifest.entries}):
        ids = [e.video_id for e in manifest.entries if e.label == label]
        if len(ids) < k:
            raise ValidationError(
                f"class {label!r} has {len(ids)} videos, fewer than the {k} folds"
            )
        for position, index in enumerate(rng.permutation(len(ids))):
            assignments[ids[index]] = position % k
    return FoldPlan(k=k, assignments=assignments, seed=seed)


@dataclass(frozen=True)
class RunResult:
    """Per-fold confusion matrices of one channel configuration."""

    configuration_id: str
    fold_matrices: tuple

    def __post_init__(self):
        if not self.fold_matrices:
            raise ValidationError("a run needs at least one fold")

    @property
    def fold_rates(self):
        return [(cm.tpr, cm.fpr) for cm in self.fold_matrices]

    @property
    def tprs(self):
        return np.array([cm.tpr for cm in self.fold_matrices])

    @property
    def fprs(self):
        return np.array([cm.fpr for cm in self.fold_matrices])

    @property
    def accuracies(self):
        return np.array([cm.accuracy for cm in self.fold_matrices])

    @property
    def mean_matrix(self) -> ConfusionMatrix:
        k = len(self.fold_matrices)
        return ConfusionMatrix(
            tp=sum(cm.tp for cm in self.fold_matrices) / k,
            fn=sum(cm.fn for cm in self.fold_matrices) / k,
            fp=sum(cm.fp for cm in self.fold_matrices) / k,
            tn=sum(cm.tn for cm in self.fold_matrices) / k,
        )


@dataclass(frozen=True)
class EvalReport:
    """Everything the report renderer needs, in one persistable value."""

    results: tuple  # RunResult entries
    alpha: float = 0.05
    anova_gate: float = 0.01

    def __post_init__(self):
        if not self.results:
            raise ValidationError("report needs at least one run result")
        object.__setattr__(self, "results", tuple(self.results))


def confusion_from_decisions(labels, decisions) -> ConfusionMatrix:
    """Count video-level decisions against ground-truth labels (+1/-1)."""
    tp = fn = fp = tn = 0
    for decision in decisions:
        truth = labels[decision.video_id]
        if truth == 1:
            if decision.label == 1:
                tp += 1
            else:
                fn += 1
        else:
            if decision.label == 1:
                fp += 1
            else:
                tn += 1
    return ConfusionMatrix(tp=tp, fn=fn, fp=fp, tn=tn)


def run_cross_validation(
    manifest, config, channel_subset=None, jobs=None, extractions=None
) -> RunResult:
    """The full protocol for one channel configuration.

    `channel_subset` names the channel ids to use (all by default);
    `extractions` lets callers reuse features across configurations,
    since extraction is independent of fold structure and channel
    subsetting.
    """
    run_config = config.subset(channel_subset) if channel_subset is not None else config
    plan = make_folds(manifest, run_config.folds, run_config.seed)
    if extractions is None:
        extractions = extract_manifest_features(manifest, run_config, jobs)
    labels = {e.video_id: e.y for e in manifest.entries}
    matrices = []
    for fold in range(plan.k):
        training_ids = plan.training_ids(manifest, fold)
        test_ids = plan.test_ids(manifest, fold)
        try:
            states = train_channel_states(extractions, labels, training_ids, run_config, fold)
        except ValidationError as exc:
            raise ValidationError(f"fold {fold}: {exc}") from exc
        decisions = [
            classify_extraction(
                extractions[vid], states, normalize_channels=run_config.normalize_channel_votes
            )
            for vid in test_ids
        ]
        matrices.append(confusion_from_decisions(labels, decisions))
    configuration_id = "+".join(spec.channel_id for spec in run_config.channels)
    return RunResult(configuration_id=configuration_id, fold_matrices=tuple(matrices))
