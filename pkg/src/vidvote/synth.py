"""Synthetic benchmark corpus with known ground truth.

The unwanted class is defined by a motion signature rather than by
appearance: positive clips contain a textured sprite whose direction of
travel reverses repeatedly (wall bounces plus scheduled mid-clip flips).
Negative clips contain no reversal. Half of them are static scenes with
a smoothly flashing disk, which produces space-time interest points of
its own (so the motion channel sees negative training material) but with
a no-motion flow signature; the other half scroll a full-frame plaid at
constant velocity, a camera-pan stand-in whose frames are exact integer
translates of each other and should yield no interest points at all.

Confounders are deliberate. Every clip draws hues from the same uniform
palette, so color histograms carry no label signal. Half of the flashing
negatives also get a static copy of the positive sprite texture, so a
purely appearance-based channel is partially fooled. A motion-sensitive
channel should therefore beat an appearance channel, which should beat
color, and that ordering is what the corpus exists to check.

Generation is a pure function of the seed: same seed, same bytes.
"""

from __future__ import annotations

import colorsys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .manifest import NEGATIVE, POSITIVE, ManifestEntry, load_manifest, save_manifest
from .video_io import write_y4m

FRAME_SIZE = 64
CLIP_FRAMES = 48
# Texture cells sized so their scale-space response lands inside the
# keypoint detector's comparable layers on a 64 px frame.
SPRITE_SIZE = 24
_CHECKER_CELL = 8
_PLAID_PERIOD = 12
_FLIP_FRAMES = (12, 24, 36)  # scheduled reversals on top of wall bounces


@dataclass(frozen=True)
class SynthParams:
    n_pos: int = 100
    n_neg: int = 100
    seed: int = 0
    size: int = FRAME_SIZE
    frames: int = CLIP_FRAMES
    frame_rate: float = 25.0


def _hsv_color(rng, value_lo, value_hi, sat_lo=0.25, sat_hi=0.6):
    h = rng.uniform(0.0, 1.0)
    s = rng.uniform(sat_lo, sat_hi)
    v = rng.uniform(value_lo, value_hi) / 255.0
    return np.array(colorsys.hsv_to_rgb(h, s, v)) * 255.0


def _background(rng, size, frames):
    # Wide value range on purpose: backgrounds must reach into the same
    # quantized color bins as the sprite tones, otherwise a plain color
    # histogram could read sprite presence straight off the extremes.
    c0 = _hsv_color(rng, 20, 210)
    c1 = c0 + rng.uniform(15, 45)
    fx, fy = rng.uniform(0.5, 1.5, size=2)
    phase = rng.uniform(0.0, 2 * np.pi)
    yy, xx = np.mgrid[0:size, 0:size]
    w = 0.5 + 0.25 * np.sin(2 * np.pi * (fx * xx + fy * yy) / size + phase)
    still = w[..., None] * c0 + (1.0 - w)[..., None] * c1
    return np.repeat(still[None], frames, axis=0)


def _sprite_colors(rng):
    # Narrow saturation band: luma weights the color channels unevenly,
    # and a saturated bright tone could otherwise land near a pale dark
    # one in luma, starving the motion detector of contrast.
    dark = _hsv_color(rng, 10, 35, sat_lo=0.15, sat_hi=0.35)
    bright = _hsv_color(rng, 215, 245, sat_lo=0.15, sat_hi=0.35)
    return dark, bright


def _checker_sprite(rng):
    dark, bright = _sprite_colors(rng)
    yy, xx = np.mgrid[0:SPRITE_SIZE, 0:SPRITE_SIZE]
    mask = ((yy // _CHECKER_CELL) + (xx // _CHECKER_CELL)) % 2
    return np.where(mask[..., None] == 0, dark, bright)


def _plaid_field(rng, size):
    """Full-frame diamond plaid, used for the scrolling negatives."""
    dark, bright = _sprite_colors(rng)
    half = _PLAID_PERIOD // 2
    yy, xx = np.mgrid[0:size, 0:size]
    mask = (((yy + xx) // half) + ((yy - xx + size) // half)) % 2
    return np.where(mask[..., None] == 0, dark, bright)


def _paste(canvas, sprite, y, x):
    s = sprite.shape[0]
    canvas[y : y + s, x : x + s] = sprite


def _bounce_track(rng, size, frames):
    """Positions of a sprite that bounces off walls and flips on schedule."""
    hi = size - SPRITE_SIZE
    pos = rng.uniform(4, hi - 4, size=2)
    vel = rng.uniform(1.25, 2.0, size=2) * rng.choice((-1.0, 1.0), size=2)
    track = np.empty((frames, 2))
    for t in range(frames):
        track[t] = pos
        if t + 1 in _FLIP_FRAMES:
            vel = -vel
        pos = pos + vel
        for axis in range(2):
            if pos[axis] < 0:
                pos[axis] = -pos[axis]
                vel[axis] = -vel[axis]
            elif pos[axis] > hi:
                pos[axis] = 2 * hi - pos[axis]
                vel[axis] = -vel[axis]
    return np.round(track).astype(int).clip(0, hi)


def _drift_velocity(rng):
    """Unit integer scroll velocity, any of the 8 directions."""
    vy, vx = rng.choice((-1, 0, 1), size=2)
    if vy == 0 and vx == 0:
        vx = 1
    return int(vy), int(vx)


def _flash_field(rng, still, frames):
    size = still.shape[0]
    cy, cx = rng.uniform(32, 44, size=2)
    sigma = rng.uniform(3.5, 5.0)
    amp = rng.uniform(40.0, 80.0)
    cycles = rng.uniform(1.5, 3.5)
    phase = rng.uniform(0.0, 2 * np.pi)
    yy, xx = np.mgrid[0:size, 0:size]
    profile = np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * sigma * sigma))
    t = np.arange(frames)
    wave = amp * np.sin(2 * np.pi * cycles * t / frames + phase)
    # Pulse darkens on bright ground so uint8 saturation cannot flatten it.
    local = float(still[int(round(cy)), int(round(cx))].mean())
    sign = -1.0 if local > 150.0 else 1.0
    return sign * wave[:, None, None] * profile[None]


def synth_video(kind, rng, params: SynthParams) -> np.ndarray:
    """One clip as (frames, size, size, 3) uint8.

    kind: "bounce" (positive), "flash", "flash_decoy", "drift" (negatives).
    """
    size, frames = params.size, params.frames
    video = _background(rng, size, frames)
    if kind == "bounce":
        sprite = _checker_sprite(rng)
        for t, (y, x) in enumerate(_bounce_track(rng, size, frames)):
            _paste(video[t], sprite, y, x)
    elif kind in ("flash", "flash_decoy"):
        video = video + _flash_field(rng, video[0], frames)[..., None]
        if kind == "flash_decoy":
            decoy = _checker_sprite(rng)
            for t in range(frames):
                _paste(video[t], decoy, 2, 2)
    elif kind == "drift":
        # Whole-field scroll: every frame is an exact integer translate
        # of the first, so there is no motion change anywhere inside.
        field = _plaid_field(rng, size)
        vy, vx = _drift_velocity(rng)
        video = np.stack([np.roll(field, (t * vy, t * vx), axis=(0, 1)) for t in range(frames)])
    else:
        raise ValueError(f"unknown clip kind {kind!r}")
    return np.clip(np.round(video), 0, 255).astype(np.uint8)


def _clip_plan(params: SynthParams):
    plan = [(f"pos{i:03d}", POSITIVE, "bounce") for i in range(params.n_pos)]
    for i in range(params.n_neg):
        if i % 2 == 0:
            kind = "flash_decoy" if i % 4 == 0 else "flash"
        else:
            kind = "drift"
        plan.append((f"neg{i:03d}", NEGATIVE, kind))
    return plan


def generate_corpus(out_dir, params: SynthParams = SynthParams()):
    """Write the clips plus manifest.csv; returns the manifest path.

    Each clip gets its own child seed keyed by position in the plan, so
    corpora of different sizes share a prefix and regeneration is exact.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for index, (video_id, label, kind) in enumerate(_clip_plan(params)):
        rng = np.random.default_rng(np.random.SeedSequence((params.seed, 7, index)))
        frames = synth_video(kind, rng, params)
        name = f"{video_id}.y4m"
        write_y4m(out / name, frames, frame_rate=params.frame_rate)
        entries.append(ManifestEntry(video_id, Path(name), label, subgroup=kind))
    manifest_path = out / "manifest.csv"
    save_manifest(manifest_path, entries)
    return manifest_path


def load_corpus_manifest(out_dir):
    return load_manifest(Path(out_dir) / "manifest.csv")
