"""Video decoding for the two supported uncompressed inputs.

Supported sources:

* Y4M streams (magic ``YUV4MPEG2``), 4:2:0 or 4:4:4 chroma. Pixels are
  converted to RGB with the full-range BT.601 matrix (the JFIF variant);
  4:2:0 chroma is upsampled by nearest neighbor. ``write_y4m`` is the
  matching encoder used by the synthetic corpus generator.
* Directories of binary portable pixmaps (``.ppm``/``.pgm``, P6/P5,
  maxval 255), one frame per file, in lexicographic filename order.

Grayscale derivation is pinned to BT.601 luma so downstream descriptor
tests stay bit-stable: luma = (0.299 R + 0.587 G + 0.114 B) / 255.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import FormatError

LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])

DEFAULT_FRAME_RATE = 25.0


def luma_from_rgb(rgb):
    """BT.601 luma in [0, 1] from an (..., 3) uint8 array."""
    return rgb.astype(np.float64) @ LUMA_WEIGHTS / 255.0


@dataclass(frozen=True)
class Frame:
    """One decoded frame: 8-bit RGB plus derived luma in [0, 1]."""

    rgb: np.ndarray   # (H, W, 3) uint8
    luma: np.ndarray  # (H, W) float64

    @property
    def height(self):
        return self.rgb.shape[0]

    @property
    def width(self):
        return self.rgb.shape[1]


@dataclass(frozen=True)
class FrameSequence:
    """Decoded video: stacked RGB frames and the derived luma volume.

    Backed by two arrays rather than per-frame objects so that the
    spatiotemporal detector can operate on the whole volume; ``frames``
    exposes the per-frame view.
    """

    video_id: str
    rgb: np.ndarray        # (T, H, W, 3) uint8
    frame_rate: float = DEFAULT_FRAME_RATE
    luma: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.rgb.ndim != 4 or self.rgb.shape[3] != 3:
            raise ValueError(f"rgb volume must be (T, H, W, 3), got {self.rgb.shape}")
        if self.rgb.shape[0] < 1:
            raise FormatError(f"{self.video_id}: video has zero frames")
        object.__setattr__(self, "luma", luma_from_rgb(self.rgb))

    @property
    def frame_count(self):
        return self.rgb.shape[0]

    @property
    def height(self):
        return self.rgb.shape[1]

    @property
    def width(self):
        return self.rgb.shape[2]

    @property
    def frames(self):
        return [self[t] for t in range(self.frame_count)]

    def __len__(self):
        return self.frame_count

    def __getitem__(self, t) -> Frame:
        return Frame(rgb=self.rgb[t], luma=self.luma[t])


# Full-range BT.601 (JFIF) RGB <-> YCbCr.
_YCBCR_FROM_RGB = np.array(
    [
        [0.299, 0.587, 0.114],
        [-0.168736, -0.331264, 0.5],
        [0.5, -0.418688, -0.081312],
    ]
)
_RGB_FROM_YCBCR = np.array(
    [
        [1.0, 0.0, 1.402],
        [1.0, -0.344136, -0.714136],
        [1.0, 1.772, 0.0],
    ]
)


def _clamp_u8(x):
    return np.clip(np.rint(x), 0, 255).astype(np.uint8)


def rgb_to_ycbcr(rgb):
    """(..., 3) uint8 RGB -> (..., 3) uint8 full-range YCbCr."""
    ycc = rgb.astype(np.float64) @ _YCBCR_FROM_RGB.T
    ycc[..., 1:] += 128.0
    return _clamp_u8(ycc)


def ycbcr_to_rgb(ycc):
    """(..., 3) uint8 full-range YCbCr -> (..., 3) uint8 RGB."""
    f = ycc.astype(np.float64)
    f[..., 1:] -= 128.0
    return _clamp_u8(f @ _RGB_FROM_YCBCR.T)


def decode_video(path, video_id=None) -> FrameSequence:
    """Decode a Y4M file or a pixmap directory into a FrameSequence.

    Raises OSError for unreadable paths and FormatError for malformed
    or empty streams. Decoding is deterministic.
    """
    p = Path(path)
    if video_id is None:
        video_id = p.stem if p.suffix else p.name
    if p.is_dir():
        return _decode_pixmap_dir(p, video_id)
    with open(p, "rb") as fh:
        head = fh.read(9)
        fh.seek(0)
        if head == b"YUV4MPEG2":
            return _decode_y4m(fh, video_id)
    raise FormatError(f"{p}: not a YUV4MPEG2 stream or pixmap directory")


def _decode_y4m(fh, video_id) -> FrameSequence:
    header = bytearray()
    while True:
        c = fh.read(1)
        if not c:
            raise FormatError(f"{video_id}: truncated Y4M header")
        if c == b"\n":
            break
        header.extend(c)
    fields = header.decode("ascii", "replace").split(" ")
    if fields[0] != "YUV4MPEG2":
        raise FormatError(f"{video_id}: bad Y4M magic")
    width = height = None
    frame_rate = DEFAULT_FRAME_RATE
    chroma = "420"
    for f in fields[1:]:
        if not f:
            continue
        tag, val = f[0], f[1:]
        if tag == "W":
            width = int(val)
        elif tag == "H":
            height = int(val)
        elif tag == "F":
            m = re.fullmatch(r"(\d+):(\d+)", val)
            if m and int(m.group(2)) > 0:
                frame_rate = int(m.group(1)) / int(m.group(2))
        elif tag == "C":
            chroma = val
    if not width or not height:
        raise FormatError(f"{video_id}: Y4M header missing W or H")
    if chroma.startswith("420"):
        subsampled = True
        if width % 2 or height % 2:
            raise FormatError(f"{video_id}: 4:2:0 needs even dimensions")
        cw, ch = width // 2, height // 2
    elif chroma.startswith("444"):
        subsampled = False
        cw, ch = width, height
    else:
        raise FormatError(f"{video_id}: unsupported chroma mode C{chroma}")

    ysize, csize = width * height, cw * ch
    frames = []
    while True:
        line = fh.readline()
        if not line:
            break
        if not line.startswith(b"FRAME"):
            raise FormatError(f"{video_id}: expected FRAME marker in Y4M stream")
        raw = fh.read(ysize + 2 * csize)
        if len(raw) != ysize + 2 * csize:
            raise FormatError(f"{video_id}: truncated Y4M frame payload")
        y = np.frombuffer(raw, np.uint8, ysize).reshape(height, width)
        cb = np.frombuffer(raw, np.uint8, csize, ysize).reshape(ch, cw)
        cr = np.frombuffer(raw, np.uint8, csize, ysize + csize).reshape(ch, cw)
        if subsampled:
            cb = cb.repeat(2, axis=0).repeat(2, axis=1)
            cr = cr.repeat(2, axis=0).repeat(2, axis=1)
        frames.append(ycbcr_to_rgb(np.stack([y, cb, cr], axis=-1)))
    if not frames:
        raise FormatError(f"{video_id}: Y4M stream contains no frames")
    return FrameSequence(video_id, np.stack(frames), frame_rate)


def write_y4m(path, rgb_frames, frame_rate=25, chroma="420jpeg"):
    """Encode (T, H, W, 3) uint8 RGB frames as a Y4M file.

    4:2:0 chroma planes are box-averaged over 2x2 blocks. The output is a
    pure function of the inputs, so identical frames give identical bytes.
    """
    rgb_frames = np.asarray(rgb_frames, np.uint8)
    t, h, w = rgb_frames.shape[:3]
    subsampled = chroma.startswith("420")
    if subsampled and (w % 2 or h % 2):
        raise FormatError("4:2:0 output needs even dimensions")
    with open(path, "wb") as fh:
        rate = f"{int(round(frame_rate))}:1"
        fh.write(f"YUV4MPEG2 W{w} H{h} F{rate} Ip A1:1 C{chroma}\n".encode())
        for i in range(t):
            ycc = rgb_to_ycbcr(rgb_frames[i])
            fh.write(b"FRAME\n")
            fh.write(ycc[..., 0].tobytes())
            for c in (1, 2):
                plane = ycc[..., c].astype(np.float64)
                if subsampled:
                    plane = (
                        plane[0::2, 0::2]
                        + plane[0::2, 1::2]
                        + plane[1::2, 0::2]
                        + plane[1::2, 1::2]
                    ) / 4.0
                fh.write(_clamp_u8(plane).tobytes())


# match() anchors at pos already; a ^ here would pin every token to byte 0
_PNM_TOKEN = re.compile(rb"(?:\s|#[^\n]*\n)*(\S+)")


def _read_pnm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    pos = 0
    tokens = []
    while len(tokens) < 4:
        m = _PNM_TOKEN.match(data, pos)
        if not m:
            raise FormatError(f"{path}: truncated PNM header")
        tokens.append(m.group(1))
        pos = m.end()
        if len(tokens) == 1 and tokens[0] not in (b"P5", b"P6"):
            raise FormatError(f"{path}: unsupported PNM type {tokens[0]!r}")
    magic, w, h, maxval = tokens[0], int(tokens[1]), int(tokens[2]), int(tokens[3])
    if maxval != 255:
        raise FormatError(f"{path}: only maxval 255 is supported, got {maxval}")
    pos += 1  # single whitespace byte after maxval
    channels = 3 if magic == b"P6" else 1
    need = w * h * channels
    if len(data) - pos < need:
        raise FormatError(f"{path}: truncated PNM payload")
    img = np.frombuffer(data, np.uint8, need, pos).reshape(h, w, channels)
    if channels == 1:
        img = np.repeat(img, 3, axis=2)
    return img


def write_pnm(path, rgb):
    """Write one (H, W, 3) uint8 frame as a binary P6 pixmap."""
    rgb = np.asarray(rgb, np.uint8)
    h, w = rgb.shape[:2]
    with open(path, "wb") as fh:
        fh.write(f"P6\n{w} {h}\n255\n".encode())
        fh.write(rgb.tobytes())


def _decode_pixmap_dir(dirpath, video_id) -> FrameSequence:
    files = sorted(
        p for p in dirpath.iterdir() if p.suffix.lower() in (".ppm", ".pgm")
    )
    if not files:
        raise FormatError(f"{dirpath}: no .ppm/.pgm frames found")
    frames = [_read_pnm(p) for p in files]
    shape = frames[0].shape
    for p, f in zip(files, frames):
        if f.shape != shape:
            raise FormatError(
                f"{p}: frame size {f.shape[1]}x{f.shape[0]} differs from "
                f"{shape[1]}x{shape[0]}"
            )
    return FrameSequence(video_id, np.stack(frames))
