"""Pipeline configuration: channels, parameters, presets, JSON round-trip.

Every run is described by one PipelineConfig. A channel binds a feature
kind to an element granularity plus its size parameter (histogram bins
or codebook words), and the legality table below rejects combinations
that make no sense (spatiotemporal features on a single frame, Zernike
moments of a shot). All randomness anywhere in the pipeline descends
from the single seed here.

Three presets reproduce the feature sets of the paper's application
studies: "porn" (64-bin RGB + 5000-word SIFT and HueSIFT bags on shot
middle-frames, 5000-word STIP bag per shot), "stuffing" (256-bin RGB +
256-bin hue + 10 Zernike moments + 5000-word SIFT and PCA-SIFT bags on
keyframes, 5000-word STIP bag and keyframe statistics per video), and
"violence" (100-word SIFT bag on middle-frames, 100-word STIP bag per
shot).
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

from .errors import ConfigError
from .color import rgb_levels_for_bins
from .segmentation import DEFAULT_CUT_THRESHOLD, DEFAULT_MIN_SHOT_LEN, SummarizerParams
from .sift import SiftParams
from .stip import DEFAULT_K_HARRIS, DEFAULT_STIP_SCALES, DEFAULT_STIP_THRESHOLD

MIDDLE_FRAME = "middle_frame"
KEYFRAME = "keyframe"
SHOT = "shot"
VIDEO = "video"

RGB_HIST = "rgb_hist"
HUE_HIST = "hue_hist"
ZERNIKE = "zernike"
SIFT = "sift"
HUESIFT = "huesift"
PCASIFT = "pcasift"
STIP = "stip"
KEYFRAME_STATS = "keyframe_stats"

BOVF_KINDS = frozenset({SIFT, HUESIFT, PCASIFT, STIP})

_LEGAL_GRANULARITY = {
    RGB_HIST: frozenset({MIDDLE_FRAME, KEYFRAME}),
    HUE_HIST: frozenset({MIDDLE_FRAME, KEYFRAME}),
    ZERNIKE: frozenset({MIDDLE_FRAME, KEYFRAME}),
    SIFT: frozenset({MIDDLE_FRAME, KEYFRAME}),
    HUESIFT: frozenset({MIDDLE_FRAME, KEYFRAME}),
    PCASIFT: frozenset({MIDDLE_FRAME, KEYFRAME}),
    STIP: frozenset({SHOT, VIDEO}),
    KEYFRAME_STATS: frozenset({VIDEO}),
}

DEFAULT_ZERNIKE_COUNT = 10


@dataclass(frozen=True)
class ChannelSpec:
    channel_id: str
    kind: str
    granularity: str
    bins: int = 0  # histogram bin count, or Zernike moment count
    codebook_k: int = 0  # bag-of-features word count

    def __post_init__(self):
        where = f"channel {self.channel_id!r}"
        if self.kind not in _LEGAL_GRANULARITY:
            raise ConfigError(f"{where}: unknown feature kind {self.kind!r}")
        if self.granularity not in _LEGAL_GRANULARITY[self.kind]:
            legal = ", ".join(sorted(_LEGAL_GRANULARITY[self.kind]))
            raise ConfigError(
                f"{where}: granularity {self.granularity!r} is not legal for "
                f"{self.kind!r} (expected one of: {legal})"
            )
        if self.kind in BOVF_KINDS:
            if self.codebook_k < 2:
                raise ConfigError(f"{where}: bag-of-features channels need codebook_k >= 2")
        elif self.kind == RGB_HIST:
            rgb_levels_for_bins(self.bins)  # raises ConfigError for unsupported counts
        elif self.kind == HUE_HIST:
            if self.bins < 1:
                raise ConfigError(f"{where}: hue histogram needs bins >= 1")
        elif self.kind == ZERNIKE:
            if self.bins < 0:
                raise ConfigError(f"{where}: zernike moment count must be >= 0 (0 = default)")

    @property
    def zernike_count(self):
        return self.bins if self.bins else DEFAULT_ZERNIKE_COUNT

    @property
    def dim(self):
        """Feature dimensionality this channel feeds to its classifier."""
        if self.kind in BOVF_KINDS:
            return self.codebook_k
        if self.kind in (RGB_HIST, HUE_HIST):
            return self.bins
        if self.kind == ZERNIKE:
            return self.zernike_count
        return 2  # keyframe_stats: count and ratio


@dataclass(frozen=True)
class StipConfig:
    scales: tuple = DEFAULT_STIP_SCALES
    k_harris: float = DEFAULT_K_HARRIS
    threshold: float = DEFAULT_STIP_THRESHOLD
    flow_window: int = 5
    flow_iters: int = 3

    def __post_init__(self):
        if not self.scales:
            raise ConfigError("stip.scales must not be empty")
        scales = tuple((float(s), float(t)) for s, t in self.scales)
        if any(s <= 0 or t <= 0 for s, t in scales):
            raise ConfigError("stip.scales entries must be positive (sigma, tau) pairs")
        object.__setattr__(self, "scales", scales)
        if self.threshold <= 0:
            raise ConfigError("stip.threshold must be positive")


@dataclass(frozen=True)
class PipelineConfig:
    channels: tuple = ()
    shot_threshold: float = DEFAULT_CUT_THRESHOLD
    min_shot_len: int = DEFAULT_MIN_SHOT_LEN
    summarizer: SummarizerParams = field(default_factory=SummarizerParams)
    sift: SiftParams = field(default_factory=SiftParams)
    stip: StipConfig = field(default_factory=StipConfig)
    svm_c: float = 1.0
    svm_epochs: int = 200
    normalize_channel_votes: bool = False  # equalize per-channel vote weight
    codebook_budget_factor: int = 200  # descriptor sample budget = factor * k
    codebook_max_iter: int = 100
    folds: int = 5
    alpha: float = 0.05
    anova_gate: float = 0.01  # pairwise tables only below this ANOVA p-value
    seed: int = 0
    jobs: int = 0  # worker count; 0 = one per CPU

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(self.channels))
        if not self.channels:
            raise ConfigError("config needs at least one channel")
        ids = [c.channel_id for c in self.channels]
        if len(set(ids)) != len(ids):
            raise ConfigError(f"duplicate channel ids: {sorted(ids)}")
        if not 0 < self.shot_threshold <= 2:
            raise ConfigError("shot_threshold must lie in (0, 2]")
        if self.folds < 2:
            raise ConfigError("folds must be >= 2")
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha must lie in (0, 1)")
        if self.svm_c <= 0:
            raise ConfigError("svm_c must be positive")

    def channel(self, channel_id) -> ChannelSpec:
        for spec in self.channels:
            if spec.channel_id == channel_id:
                return spec
        raise ConfigError(f"no channel {channel_id!r} in config")

    def subset(self, channel_ids) -> "PipelineConfig":
        """Same config restricted to the named channels, order preserved."""
        if not channel_ids:
            raise ConfigError("channel subset must not be empty")
        picked = tuple(self.channel(cid) for cid in channel_ids)
        return dataclasses.replace(self, channels=picked)


def preset_config(name, **overrides) -> PipelineConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return dataclasses.replace(PRESETS[name], **overrides) if overrides else PRESETS[name]


PRESETS = {
    "porn": PipelineConfig(
        channels=(
            ChannelSpec("rgb64", RGB_HIST, MIDDLE_FRAME, bins=64),
            ChannelSpec("sift", SIFT, MIDDLE_FRAME, codebook_k=5000),
            ChannelSpec("huesift", HUESIFT, MIDDLE_FRAME, codebook_k=5000),
            ChannelSpec("stip", STIP, SHOT, codebook_k=5000),
        )
    ),
    "stuffing": PipelineConfig(
        channels=(
            ChannelSpec("rgb256", RGB_HIST, KEYFRAME, bins=256),
            ChannelSpec("hue256", HUE_HIST, KEYFRAME, bins=256),
            ChannelSpec("zernike", ZERNIKE, KEYFRAME, bins=10),
            ChannelSpec("sift", SIFT, KEYFRAME, codebook_k=5000),
            ChannelSpec("pcasift", PCASIFT, KEYFRAME, codebook_k=5000),
            ChannelSpec("stip", STIP, VIDEO, codebook_k=5000),
            ChannelSpec("kfstats", KEYFRAME_STATS, VIDEO),
        )
    ),
    "violence": PipelineConfig(
        channels=(
            ChannelSpec("sift", SIFT, MIDDLE_FRAME, codebook_k=100),
            ChannelSpec("stip", STIP, SHOT, codebook_k=100),
        )
    ),
}


def _from_mapping(cls, data, path):
    """Build a (possibly nested) dataclass from a JSON mapping.

    Errors name the offending field by dotted path so a config typo is a
    one-line fix instead of a stack trace.
    """
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected an object, got {type(data).__name__}")
    fields = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(data) - set(fields)
    if unknown:
        raise ConfigError(f"{path}: unknown field {sorted(unknown)[0]!r}")
    kwargs = {}
    for name, value in data.items():
        sub = f"{path}.{name}" if path else name
        if name == "channels":
            if not isinstance(value, list):
                raise ConfigError(f"{sub}: expected a list")
            kwargs[name] = tuple(
                _from_mapping(ChannelSpec, entry, f"{sub}[{i}]") for i, entry in enumerate(value)
            )
        elif name == "summarizer":
            kwargs[name] = _from_mapping(SummarizerParams, value, sub)
        elif name == "sift":
            kwargs[name] = _from_mapping(SiftParams, value, sub)
        elif name == "stip":
            kwargs[name] = _from_mapping(StipConfig, value, sub)
        elif name == "scales":
            try:
                kwargs[name] = tuple((float(s), float(t)) for s, t in value)
            except (TypeError, ValueError):
                raise ConfigError(f"{sub}: expected a list of [sigma, tau] pairs") from None
        else:
            if isinstance(value, (dict, list)):
                raise ConfigError(f"{sub}: expected a scalar")
            kwargs[name] = value
    try:
        return cls(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path or cls.__name__}: {exc}") from None


def config_from_dict(data) -> PipelineConfig:
    return _from_mapping(PipelineConfig, data, "")


def config_to_dict(config: PipelineConfig) -> dict:
    return dataclasses.asdict(config)


def load_config(path) -> PipelineConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    return config_from_dict(data)


def save_config(config: PipelineConfig, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(config_to_dict(config), fh, indent=2, sort_keys=True)
        fh.write("\n")
