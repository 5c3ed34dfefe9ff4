"""Per-channel linear classifiers and majority-vote fusion.

One linear model per feature channel, trained on class-balanced element
features by stochastic sub-gradient descent on the L2-regularized hinge
objective

    J(w, b) = ||w||^2 / (2 C n) + (1/n) sum_i max(0, 1 - y_i (w.x_i + b))

with step 1/(lambda t), lambda = 1/(C n). The bias rides along
unregularized. Iterates are snapshotted at every epoch end and the one
with the lowest objective wins, which makes the returned model no worse
than the initial all-zeros iterate on every dataset.

At classification time every (channel, element) pair casts one vote,
elements with empty-flagged histograms abstain, and the video label is
the sign of the vote majority with ties resolved to negative: false
positives are the costlier mistake for an unwanted-content filter.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ValidationError

POSITIVE_LABEL = 1
NEGATIVE_LABEL = -1
DEFAULT_C = 1.0
DEFAULT_EPOCHS = 200


@dataclass(frozen=True)
class TrainingExample:
    vector: np.ndarray
    label: int
    video_id: str = ""
    element_ref: tuple = ()

    def __post_init__(self):
        if self.label not in (POSITIVE_LABEL, NEGATIVE_LABEL):
            raise ValidationError(f"label must be +1 or -1, got {self.label}")

    @classmethod
    def from_feature(cls, feature, label, video_id="", element_ref=()):
        if getattr(feature, "is_empty", False):
            raise ValidationError(
                f"empty-flagged feature cannot train (video {video_id!r}, element {element_ref})"
            )
        return cls(np.asarray(feature.values, dtype=np.float64), label, video_id, element_ref)


@dataclass(frozen=True)
class ChannelModel:
    channel_id: str
    weights: np.ndarray
    bias: float
    c: float
    seed: int = 0
    n_pos: int = 0
    n_neg: int = 0

    def __post_init__(self):
        if not np.all(np.isfinite(self.weights)) or not np.isfinite(self.bias):
            raise ValidationError(f"channel {self.channel_id}: non-finite model parameters")


def balance_training_set(examples, seed):
    """Subsample the majority class to the minority count, then shuffle.

    Order and subset are fully determined by the seed; the minority
    class is never touched.
    """
    pos = [e for e in examples if e.label == POSITIVE_LABEL]
    neg = [e for e in examples if e.label == NEGATIVE_LABEL]
    if not pos or not neg:
        raise ValidationError("both classes must be present to balance")
    rng = np.random.default_rng(seed)
    minority = min(len(pos), len(neg))
    if len(pos) > minority:
        pos = [pos[i] for i in rng.choice(len(pos), size=minority, replace=False)]
    if len(neg) > minority:
        neg = [neg[i] for i in rng.choice(len(neg), size=minority, replace=False)]
    merged = pos + neg
    return [merged[i] for i in rng.permutation(len(merged))]


def hinge_objective(weights, bias, vectors, labels, c):
    n = len(labels)
    margins = labels * (vectors @ weights + bias)
    reg = float(weights @ weights) / (2.0 * c * n)
    return reg + float(np.maximum(0.0, 1.0 - margins).sum()) / n


def train_linear_svm(examples, c=DEFAULT_C, epochs=DEFAULT_EPOCHS, seed=0, channel_id=""):
    if len(examples) < 2:
        raise ValidationError("need at least two training examples")
    labels = np.array([e.label for e in examples], dtype=np.float64)
    if not (np.any(labels > 0) and np.any(labels < 0)):
        raise ValidationError("training set must contain both classes")
    dims = {len(e.vector) for e in examples}
    if len(dims) != 1:
        raise ValidationError(f"inconsistent feature dimensionality: {sorted(dims)}")
    for e in examples:
        if not np.all(np.isfinite(e.vector)):
            raise ValidationError(
                f"non-finite feature (video {e.video_id!r}, element {e.element_ref})"
            )
    vectors = np.array([e.vector for e in examples], dtype=np.float64)

    n, dim = vectors.shape
    lam = 1.0 / (c * n)
    rng = np.random.default_rng(seed)
    w = np.zeros(dim)
    b = 0.0
    best = (hinge_objective(w, b, vectors, labels, c), w.copy(), b)
    t = 0
    for _ in range(epochs):
        for i in rng.permutation(n):
            t += 1
            eta = 1.0 / (lam * t)
            if labels[i] * (vectors[i] @ w + b) < 1.0:
                w *= 1.0 - eta * lam
                w += eta * labels[i] * vectors[i]
                b += eta * labels[i]
            else:
                w *= 1.0 - eta * lam
        j = hinge_objective(w, b, vectors, labels, c)
        if j < best[0]:
            best = (j, w.copy(), b)
    _, w, b = best
    return ChannelModel(
        channel_id=channel_id,
        weights=w,
        bias=float(b),
        c=c,
        seed=seed,
        n_pos=int(np.sum(labels > 0)),
        n_neg=int(np.sum(labels < 0)),
    )


def predict(model: ChannelModel, feature):
    """(vote, margin) for one element feature; None means abstention.

    Zero margin votes negative, consistent with the fusion tie rule.
    """
    if getattr(feature, "is_empty", False):
        return None
    values = np.asarray(getattr(feature, "values", feature), dtype=np.float64)
    if values.shape != model.weights.shape:
        raise ValidationError(
            f"channel {model.channel_id}: feature dim {values.shape} "
            f"does not match model dim {model.weights.shape}"
        )
    margin = float(values @ model.weights + model.bias)
    vote = POSITIVE_LABEL if margin > 0 else NEGATIVE_LABEL
    return vote, margin


def majority_label(votes):
    """Sign of the vote majority over an iterable of +/-1; tie is negative."""
    tally = sum(votes)
    return POSITIVE_LABEL if tally > 0 else NEGATIVE_LABEL


@dataclass(frozen=True)
class ElementFeature:
    """One extracted feature of one video element, addressed by channel."""

    channel_id: str
    element_ref: tuple  # (element kind, index)
    feature: object


@dataclass(frozen=True)
class VideoDecision:
    video_id: str
    votes: tuple = field(default=())  # (channel_id, element_ref, vote, margin) records
    tally: tuple = (0, 0)  # (positives, negatives)
    label: int = NEGATIVE_LABEL
    abstained: int = 0


def classify_video(models, video_id, element_features, normalize_channels=False) -> VideoDecision:
    """Ask every channel model about every element it covers, then fuse.

    Each element feature is routed to the model with its channel_id; a
    feature without a model is a wiring mistake, not a data condition.

    With normalize_channels, each channel's votes are downweighted by the
    number of votes it cast, so a 30-shot channel cannot outshout a
    whole-video one.  Tally stays in raw counts either way; only the
    label decision changes.  Ties fall to negative under both rules.
    """
    by_channel = {m.channel_id: m for m in models}
    votes = []
    abstained = 0
    for ef in element_features:
        model = by_channel.get(ef.channel_id)
        if model is None:
            raise ConfigError(f"no model for channel {ef.channel_id!r}")
        outcome = predict(model, ef.feature)
        if outcome is None:
            abstained += 1
            continue
        vote, margin = outcome
        votes.append((ef.channel_id, ef.element_ref, vote, margin))
    positives = sum(1 for v in votes if v[2] == POSITIVE_LABEL)
    negatives = len(votes) - positives
    if normalize_channels:
        cast = {}
        for v in votes:
            cast[v[0]] = cast.get(v[0], 0) + 1
        score = sum(v[2] / cast[v[0]] for v in votes)
        label = POSITIVE_LABEL if score > 0 else NEGATIVE_LABEL
    else:
        label = POSITIVE_LABEL if positives > negatives else NEGATIVE_LABEL
    return VideoDecision(
        video_id=video_id,
        votes=tuple(votes),
        tally=(positives, negatives),
        label=label,
        abstained=abstained,
    )
