"""Unwanted-video detection by majority vote over visual feature channels.

The pipeline decodes videos, segments them into elements (middle frames,
keyframes, shots, or whole clips), extracts per-element features (color
and hue histograms, Zernike moments, bags of local appearance and
space-time descriptors, summary statistics), trains one linear classifier
per channel, and fuses the per-element votes into a per-video label.
Evaluation is stratified k-fold cross-validation with ROC points,
confidence intervals, one-way ANOVA, and pairwise Welch tests.

Entry points: the ``vidvote`` command (see ``vidvote --help``) or
:func:`vidvote.evaluation.run_cross_validation` from Python.
"""

from .classify import classify_video, majority_label, predict, train_linear_svm
from .codebook import encode_bovf, train_codebook
from .config import PipelineConfig, load_config, preset_config, save_config
from .evaluation import make_folds, run_cross_validation
from .manifest import load_manifest, save_manifest
from .pipeline import extract_manifest_features, extract_video_features
from .report import render_report
from .stats import anova_one_way, confidence_interval, pairwise_t_tests, roc_point
from .video_io import decode_video

__version__ = "0.1.0"

__all__ = [
    "PipelineConfig",
    "anova_one_way",
    "classify_video",
    "confidence_interval",
    "decode_video",
    "encode_bovf",
    "extract_manifest_features",
    "extract_video_features",
    "load_config",
    "load_manifest",
    "majority_label",
    "make_folds",
    "pairwise_t_tests",
    "predict",
    "preset_config",
    "render_report",
    "roc_point",
    "run_cross_validation",
    "save_config",
    "save_manifest",
    "train_codebook",
    "train_linear_svm",
]
