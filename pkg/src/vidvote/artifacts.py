"""Binary persistence for codebooks, models, projections, and results.

One container format for every artifact:

    magic  b"VVAR"
    format version   u32
    type tag         u32
    payload length   u64
    payload crc32    u32
    payload bytes

All integers little-endian; dimensions are u32, counts that can exceed
4 bytes are u64, reals are IEEE-754 binary64, strings are u32 byte
length plus UTF-8. Round-trips are bit-exact, which the leakage and
determinism tests rely on: two artifacts are interchangeable exactly
when their files are byte-identical.
"""

from __future__ import annotations

import io
import struct
import zlib

import numpy as np

from .classify import ChannelModel
from .codebook import Codebook
from .errors import FormatError
from .evaluation import EvalReport, RunResult
from .sift import PcaProjection
from .stats import ConfusionMatrix

MAGIC = b"VVAR"
FORMAT_VERSION = 1

TAG_CODEBOOK = 1
TAG_CHANNEL_MODEL = 2
TAG_EVAL_REPORT = 3
TAG_PCA_PROJECTION = 4
TAG_DESCRIPTOR_DUMP = 5


def _pack_str(out, s):
    raw = s.encode("utf-8")
    out.write(struct.pack("<I", len(raw)))
    out.write(raw)


def _pack_f64(out, array):
    out.write(np.ascontiguousarray(array, dtype="<f8").tobytes())


class _Reader:
    def __init__(self, payload):
        self.buf = payload
        self.pos = 0

    def take(self, n):
        if self.pos + n > len(self.buf):
            raise FormatError("artifact payload truncated")
        chunk = self.buf[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def u32(self):
        return struct.unpack("<I", self.take(4))[0]

    def u64(self):
        return struct.unpack("<Q", self.take(8))[0]

    def i64(self):
        return struct.unpack("<q", self.take(8))[0]

    def f64(self):
        return struct.unpack("<d", self.take(8))[0]

    def string(self):
        return self.take(self.u32()).decode("utf-8")

    def f64_array(self, shape):
        count = int(np.prod(shape)) if shape else 0
        data = np.frombuffer(self.take(8 * count), dtype="<f8")
        return data.reshape(shape).astype(np.float64)

    def done(self):
        if self.pos != len(self.buf):
            raise FormatError(f"{len(self.buf) - self.pos} unread payload bytes")


def _encode_codebook(cb: Codebook):
    out = io.BytesIO()
    _pack_str(out, cb.channel_id)
    out.write(struct.pack("<IIq", cb.k, cb.dim, cb.seed))
    _pack_f64(out, cb.centroids)
    return out.getvalue()


def _decode_codebook(r: _Reader):
    channel_id = r.string()
    k, dim = r.u32(), r.u32()
    seed = r.i64()
    return Codebook(channel_id, r.f64_array((k, dim)), seed)


def _encode_model(m: ChannelModel):
    out = io.BytesIO()
    _pack_str(out, m.channel_id)
    out.write(struct.pack("<I", len(m.weights)))
    _pack_f64(out, m.weights)
    out.write(struct.pack("<ddqII", m.bias, m.c, m.seed, m.n_pos, m.n_neg))
    return out.getvalue()


def _decode_model(r: _Reader):
    channel_id = r.string()
    dim = r.u32()
    weights = r.f64_array((dim,))
    bias, c = r.f64(), r.f64()
    seed = r.i64()
    n_pos, n_neg = r.u32(), r.u32()
    return ChannelModel(channel_id, weights, bias, c, seed, n_pos, n_neg)


def _encode_report(rep: EvalReport):
    out = io.BytesIO()
    out.write(struct.pack("<ddI", rep.alpha, rep.anova_gate, len(rep.results)))
    for result in rep.results:
        _pack_str(out, result.configuration_id)
        out.write(struct.pack("<I", len(result.fold_matrices)))
        for cm in result.fold_matrices:
            out.write(struct.pack("<dddd", cm.tp, cm.fn, cm.fp, cm.tn))
    return out.getvalue()


def _decode_report(r: _Reader):
    alpha, gate = r.f64(), r.f64()
    results = []
    for _ in range(r.u32()):
        configuration_id = r.string()
        matrices = tuple(
            ConfusionMatrix(r.f64(), r.f64(), r.f64(), r.f64()) for _ in range(r.u32())
        )
        results.append(RunResult(configuration_id, matrices))
    return EvalReport(tuple(results), alpha=alpha, anova_gate=gate)


def _encode_projection(p: PcaProjection):
    out = io.BytesIO()
    target, dim = p.components.shape
    out.write(struct.pack("<II", dim, target))
    _pack_f64(out, p.mean)
    _pack_f64(out, p.components)
    _pack_f64(out, p.variances)
    return out.getvalue()


def _decode_projection(r: _Reader):
    dim, target = r.u32(), r.u32()
    mean = r.f64_array((dim,))
    components = r.f64_array((target, dim))
    variances = r.f64_array((target,))
    return PcaProjection(mean, components, variances)


class DescriptorDump:
    """A raw (count, dim) descriptor matrix tagged with its channel.

    The on-disk unit for `extract`: one dump per video element, read
    back when codebooks are trained from persisted features.
    """

    def __init__(self, channel_id, descriptors):
        self.channel_id = channel_id
        self.descriptors = np.asarray(descriptors, dtype=np.float64)
        if self.descriptors.ndim != 2:
            raise FormatError("descriptor dump needs an (n, dim) matrix")

    def __eq__(self, other):
        return (
            isinstance(other, DescriptorDump)
            and self.channel_id == other.channel_id
            and self.descriptors.shape == other.descriptors.shape
            and np.array_equal(self.descriptors, other.descriptors)
        )


def _encode_dump(d: DescriptorDump):
    out = io.BytesIO()
    _pack_str(out, d.channel_id)
    count, dim = d.descriptors.shape
    out.write(struct.pack("<QI", count, dim))
    _pack_f64(out, d.descriptors)
    return out.getvalue()


def _decode_dump(r: _Reader):
    channel_id = r.string()
    count, dim = r.u64(), r.u32()
    return DescriptorDump(channel_id, r.f64_array((count, dim)))


_CODECS = {
    TAG_CODEBOOK: (Codebook, _encode_codebook, _decode_codebook),
    TAG_CHANNEL_MODEL: (ChannelModel, _encode_model, _decode_model),
    TAG_EVAL_REPORT: (EvalReport, _encode_report, _decode_report),
    TAG_PCA_PROJECTION: (PcaProjection, _encode_projection, _decode_projection),
    TAG_DESCRIPTOR_DUMP: (DescriptorDump, _encode_dump, _decode_dump),
}


def artifact_bytes(artifact) -> bytes:
    for tag, (klass, encode, _) in _CODECS.items():
        if isinstance(artifact, klass):
            payload = encode(artifact)
            header = MAGIC + struct.pack(
                "<IIQI", FORMAT_VERSION, tag, len(payload), zlib.crc32(payload)
            )
            return header + payload
    raise FormatError(f"no artifact encoding for {type(artifact).__name__}")


def store_artifact(artifact, path):
    with open(path, "wb") as fh:
        fh.write(artifact_bytes(artifact))


def load_artifact(path):
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != MAGIC:
        raise FormatError(f"{path}: not an artifact file (bad magic)")
    if len(blob) < 24:
        raise FormatError(f"{path}: truncated header")
    version, tag, length, crc = struct.unpack("<IIQI", blob[4:24])
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}: format version {version}, expected {FORMAT_VERSION}")
    payload = blob[24:]
    if len(payload) != length:
        raise FormatError(f"{path}: payload is {len(payload)} bytes, header says {length}")
    if zlib.crc32(payload) != crc:
        raise FormatError(f"{path}: checksum mismatch, artifact corrupted")
    if tag not in _CODECS:
        raise FormatError(f"{path}: unknown artifact type tag {tag}")
    reader = _Reader(payload)
    artifact = _CODECS[tag][2](reader)
    reader.done()
    return artifact
