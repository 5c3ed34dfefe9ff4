"""Command line front end.

Subcommands mirror the pipeline stages:

    synth     generate the synthetic benchmark corpus + manifest
    extract   decode videos and write per-element features to disk
    codebook  build per-channel visual codebooks from extracted features
    train     fit the per-channel voting classifiers
    classify  label videos, one JSON record per line
    crossval  run the full cross-validated evaluation and report bundle

`--config` takes either a JSON file or a preset name. Exit codes: 0 on
success, 1 for usage or configuration problems, 2 for bad input data,
3 for an internal invariant failure.

On-disk feature layout (written by extract, read by codebook/train):
`<out>/<video_id>/<channel>__<granularity>__<index>.vvar`, one artifact
per element, plus a small meta.json per video. Channel ids containing
"__" would break the filename round trip and are rejected here.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import config as cfg
from .artifacts import DescriptorDump, load_artifact, store_artifact
from .classify import ChannelModel, ElementFeature
from .codebook import Codebook
from .config import PRESETS, PipelineConfig, load_config, preset_config
from .errors import ConfigError, FormatError, ValidationError
from .evaluation import EvalReport, run_cross_validation
from .features import DenseFeature
from .manifest import load_manifest
from .pipeline import (
    ChannelState,
    VideoExtraction,
    build_channel_codebooks,
    classify_extraction,
    extract_manifest_features,
    extract_video_features,
    train_channel_states,
)
from .report import render_report
from .sift import PcaProjection
from .synth import SynthParams, generate_corpus
from .video_io import decode_video


def _load_pipeline_config(args) -> PipelineConfig:
    name = args.config
    if name is None:
        raise ConfigError("this subcommand needs --config (a JSON file or preset name)")
    if name in PRESETS:
        config = preset_config(name)
    elif Path(name).exists():
        config = load_config(name)
    else:
        raise ConfigError(
            f"--config {name!r} is neither a file nor a preset {sorted(PRESETS)}"
        )
    if getattr(args, "seed", None) is not None:
        config = replace(config, seed=args.seed)
    if getattr(args, "jobs", None) is not None:
        config = replace(config, jobs=args.jobs)
    for spec in config.channels:
        if "__" in spec.channel_id:
            raise ConfigError(f"channel id {spec.channel_id!r} may not contain '__'")
    return config


def _element_name(channel_id, ref, index):
    return f"{channel_id}__{ref[0]}__{index:05d}.vvar"


def _write_extraction(out_dir: Path, ex: VideoExtraction, config):
    vdir = out_dir / ex.video_id
    vdir.mkdir(parents=True, exist_ok=True)
    with open(vdir / "meta.json", "w", encoding="utf-8") as fh:
        json.dump({"video_id": ex.video_id, "frame_count": ex.frame_count}, fh, sort_keys=True)
        fh.write("\n")
    counters = {}
    for ef in ex.dense:
        i = counters.get(ef.channel_id, 0)
        counters[ef.channel_id] = i + 1
        dump = DescriptorDump(ef.channel_id, np.asarray(ef.feature.values, np.float64)[None, :])
        store_artifact(dump, vdir / _element_name(ef.channel_id, ef.element_ref, i))
    for channel_id, groups in ex.local.items():
        for i, (ref, matrix) in enumerate(groups):
            dump = DescriptorDump(channel_id, np.asarray(matrix, np.float64))
            store_artifact(dump, vdir / _element_name(channel_id, ref, i))


def _read_extraction(out_dir: Path, video_id, config) -> VideoExtraction:
    vdir = out_dir / video_id
    meta_path = vdir / "meta.json"
    if not meta_path.exists():
        raise ConfigError(
            f"no extracted features for {video_id!r} under {out_dir}; "
            "run the extract subcommand first"
        )
    with open(meta_path, encoding="utf-8") as fh:
        meta = json.load(fh)
    specs = {spec.channel_id: spec for spec in config.channels}
    dense = []
    local = {}
    for path in sorted(vdir.glob("*.vvar")):
        channel_id, gran, index = path.stem.split("__")
        spec = specs.get(channel_id)
        if spec is None:
            continue
        dump = load_artifact(path)
        ref = (gran, int(index))
        if spec.kind in cfg.BOVF_KINDS:
            local.setdefault(channel_id, []).append((ref, dump.descriptors))
        else:
            dense.append(ElementFeature(channel_id, ref, DenseFeature(spec.kind, dump.descriptors[0])))
    local = {k: tuple(v) for k, v in local.items()}
    for spec in config.channels:
        if spec.kind in cfg.BOVF_KINDS and spec.channel_id not in local:
            local[spec.channel_id] = ()
    return VideoExtraction(meta["video_id"], meta["frame_count"], tuple(dense), local)


def _load_extractions(features_dir, config, video_ids) -> dict:
    out_dir = Path(features_dir)
    return {vid: _read_extraction(out_dir, vid, config) for vid in video_ids}


def _labels(manifest):
    return {e.video_id: e.y for e in manifest.entries}


def cmd_synth(args):
    params = SynthParams(n_pos=args.pos, n_neg=args.neg, seed=args.seed or 0)
    manifest_path = generate_corpus(args.out, params)
    print(manifest_path)
    return 0


def cmd_extract(args):
    config = _load_pipeline_config(args)
    manifest = load_manifest(args.manifest)
    extractions = extract_manifest_features(manifest, config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for vid in manifest.video_ids:
        _write_extraction(out, extractions[vid], config)
    print(f"extracted {len(extractions)} videos -> {out}")
    return 0


def cmd_codebook(args):
    config = _load_pipeline_config(args)
    manifest = load_manifest(args.manifest)
    extractions = _load_extractions(args.features, config, manifest.video_ids)
    built = build_channel_codebooks(extractions, list(manifest.video_ids), config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for channel_id, (codebook, projection) in built.items():
        store_artifact(codebook, out / f"{channel_id}.codebook.vvar")
        if projection is not None:
            store_artifact(projection, out / f"{channel_id}.pca.vvar")
    print(f"trained {len(built)} codebooks -> {out}")
    return 0


def _load_codebooks(config, artifacts_dir: Path) -> dict:
    built = {}
    for spec in config.channels:
        if spec.kind not in cfg.BOVF_KINDS:
            continue
        cb_path = artifacts_dir / f"{spec.channel_id}.codebook.vvar"
        if not cb_path.exists():
            raise ConfigError(
                f"missing codebook {cb_path}; run the codebook subcommand first"
            )
        codebook = load_artifact(cb_path)
        if not isinstance(codebook, Codebook):
            raise FormatError(f"{cb_path} does not hold a codebook")
        projection = None
        pca_path = artifacts_dir / f"{spec.channel_id}.pca.vvar"
        if spec.kind == cfg.PCASIFT:
            if not pca_path.exists():
                raise ConfigError(
                    f"missing projection {pca_path}; run the codebook subcommand first"
                )
            projection = load_artifact(pca_path)
            if not isinstance(projection, PcaProjection):
                raise FormatError(f"{pca_path} does not hold a projection")
        built[spec.channel_id] = (codebook, projection)
    return built


def cmd_train(args):
    config = _load_pipeline_config(args)
    manifest = load_manifest(args.manifest)
    extractions = _load_extractions(args.features, config, manifest.video_ids)
    codebooks = _load_codebooks(config, Path(args.codebooks))
    states = train_channel_states(
        extractions, _labels(manifest), list(manifest.video_ids), config, codebooks=codebooks
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for state in states:
        store_artifact(state.model, out / f"{state.spec.channel_id}.model.vvar")
    print(f"trained {len(states)} channel models -> {out}")
    return 0


def _load_states(config, artifacts_dir: Path):
    codebooks = _load_codebooks(config, artifacts_dir)
    states = []
    for spec in config.channels:
        model_path = artifacts_dir / f"{spec.channel_id}.model.vvar"
        if not model_path.exists():
            raise ConfigError(f"missing model {model_path}; run the train subcommand first")
        model = load_artifact(model_path)
        if not isinstance(model, ChannelModel):
            raise FormatError(f"{model_path} does not hold a channel model")
        codebook, projection = codebooks.get(spec.channel_id, (None, None))
        states.append(ChannelState(spec, model, codebook, projection))
    return states


def _decision_record(decision) -> dict:
    return {
        "video_id": decision.video_id,
        "label": "pos" if decision.label > 0 else "neg",
        "tally": {"pos": decision.tally[0], "neg": decision.tally[1]},
        "abstained": decision.abstained,
        "votes": [
            {
                "channel": channel_id,
                "element": f"{ref[0]}:{ref[1]}",
                "vote": vote,
                "margin": margin,
            }
            for channel_id, ref, vote, margin in decision.votes
        ],
    }


def cmd_classify(args):
    config = _load_pipeline_config(args)
    states = _load_states(config, Path(args.models))
    if args.manifest:
        manifest = load_manifest(args.manifest)
        items = [(e.video_id, e.path) for e in manifest.entries]
    else:
        if not args.videos:
            raise ConfigError("classify needs --manifest or at least one video path")
        items = [(Path(p).stem, Path(p)) for p in args.videos]
    sink = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        for video_id, path in items:
            video = decode_video(path, video_id=video_id)
            extraction = extract_video_features(video, config)
            decision = classify_extraction(
                extraction, states, normalize_channels=config.normalize_channel_votes
            )
            sink.write(json.dumps(_decision_record(decision), sort_keys=True))
            sink.write("\n")
    finally:
        if sink is not sys.stdout:
            sink.close()
    return 0


def cmd_crossval(args):
    config = _load_pipeline_config(args)
    manifest = load_manifest(args.manifest)
    extractions = extract_manifest_features(manifest, config)
    results = []
    if args.per_channel:
        for spec in config.channels:
            results.append(
                run_cross_validation(
                    manifest, config, channel_subset=[spec.channel_id], extractions=extractions
                )
            )
    if len(config.channels) > 1 or not args.per_channel:
        results.append(run_cross_validation(manifest, config, extractions=extractions))
    report = EvalReport(tuple(results), alpha=config.alpha, anova_gate=config.anova_gate)
    paths = render_report(report, args.out)
    for name in sorted(paths):
        print(paths[name])
    return 0


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; this pipeline reserves 2 for data."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vidvote", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="command")

    def common(p, config=True):
        if config:
            p.add_argument("--config", help="pipeline config: JSON file or preset name")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--jobs", type=int, default=None, help="worker processes (0 = all cores)")

    p = sub.add_parser("synth", help="generate the synthetic benchmark corpus")
    common(p, config=False)
    p.add_argument("--out", required=True, help="corpus output directory")
    p.add_argument("--pos", type=int, default=100, help="positive clip count")
    p.add_argument("--neg", type=int, default=100, help="negative clip count")
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("extract", help="extract per-element features to disk")
    common(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="feature output directory")
    p.set_defaults(fn=cmd_extract)

    p = sub.add_parser("codebook", help="train per-channel codebooks")
    common(p)
    p.add_argument("--manifest", required=True, help="training videos")
    p.add_argument("--features", required=True, help="directory written by extract")
    p.add_argument("--out", required=True, help="artifact output directory")
    p.set_defaults(fn=cmd_codebook)

    p = sub.add_parser("train", help="train per-channel classifiers")
    common(p)
    p.add_argument("--manifest", required=True, help="training videos with labels")
    p.add_argument("--features", required=True, help="directory written by extract")
    p.add_argument("--codebooks", required=True, help="directory written by codebook")
    p.add_argument("--out", required=True, help="artifact output directory")
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("classify", help="label videos with a trained pipeline")
    common(p)
    p.add_argument("--models", required=True, help="directory holding codebooks and models")
    p.add_argument("--manifest", help="videos to classify")
    p.add_argument("--out", help="write records here instead of stdout")
    p.add_argument("videos", nargs="*", help="video paths (alternative to --manifest)")
    p.set_defaults(fn=cmd_classify)

    p = sub.add_parser("crossval", help="cross-validated evaluation + report bundle")
    common(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="report bundle directory")
    p.add_argument(
        "--per-channel",
        action="store_true",
        help="also evaluate each channel alone (enables the comparison tables)",
    )
    p.set_defaults(fn=cmd_crossval)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "fn", None):
        parser.print_help(sys.stderr)
        return 1
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (FormatError, ValidationError, FileNotFoundError, IsADirectoryError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001  anything else is a bug in here
        import traceback

        traceback.print_exc()
        print(f"internal error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
