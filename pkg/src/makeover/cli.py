"""Command line interface: train, transfer, remove, eval, make-fixtures.

Every flag has a config-file equivalent (same name, underscores); a flag
given on the command line wins over the file. Exit codes: 0 success,
1 usage or configuration problem, 2 numerical abort during training.
The PSGANPP_SEED environment variable, when set, overrides the training
seed from both flags and config files.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from . import assets, engine
from .config import (
    TRAIN_OPTION_KEYS,
    merge_options,
    parse_bool,
    read_config_file,
    train_config_from_options,
)
from .errors import AssetError, CheckpointError, ConfigurationError, NumericalError
from .evalkit import MeanPoolEmbedder, write_eval_report
from .fixtures import write_fixture_corpus
from .networks import load_checkpoint
from .training import Corpus, train_loop

SEED_ENV_VAR = "PSGANPP_SEED"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERIC = 2

_TRAIN_COMMAND_KEYS = ("manifest", "out", "resume")
_TRANSFER_KEYS = (
    "checkpoint",
    "source",
    "reference",
    "alpha",
    "regions",
    "remove",
    "video_dir",
    "blend_bg",
    "out",
    "dump_attention",
    "w_visual",
)
_EVAL_KEYS = ("checkpoint", "manifest", "out")


class _Parser(argparse.ArgumentParser):
    """Usage problems exit 1 (argparse defaults to 2)."""

    def error(self, message):
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _require(opts: dict, key: str, command: str):
    value = opts.get(key)
    if value in (None, ""):
        raise ConfigurationError(f"{command}: missing required option {key!r}")
    return value


def _file_options(args, allowed: tuple[str, ...]) -> dict:
    if not getattr(args, "config", None):
        return {}
    options = read_config_file(args.config)
    unknown = set(options) - set(allowed)
    if unknown:
        raise ConfigurationError(f"unknown config keys for this command: {sorted(unknown)}")
    return options


def _split_list(value) -> list[str]:
    if isinstance(value, (list, tuple)):
        return [str(v) for v in value]
    text = str(value).strip()
    return [part.strip() for part in text.split(",") if part.strip()]


# -- train --------------------------------------------------------------------


def cmd_train(args) -> int:
    allowed = (*_TRAIN_COMMAND_KEYS, *TRAIN_OPTION_KEYS)
    file_opts = _file_options(args, allowed)
    cmd_opts = merge_options(
        {k: v for k, v in file_opts.items() if k in _TRAIN_COMMAND_KEYS},
        {k: getattr(args, k) for k in _TRAIN_COMMAND_KEYS},
    )
    cfg_opts = merge_options(
        {k: v for k, v in file_opts.items() if k not in _TRAIN_COMMAND_KEYS},
        {k: getattr(args, k) for k in TRAIN_OPTION_KEYS},
    )
    env_seed = os.environ.get(SEED_ENV_VAR)
    if env_seed is not None:
        cfg_opts["seed"] = env_seed
    config = train_config_from_options(cfg_opts)
    manifest_path = _require(cmd_opts, "manifest", "train")
    out_dir = _require(cmd_opts, "out", "train")
    manifest = assets.load_manifest(manifest_path).validate_for_training()
    bundle, metrics_path = train_loop(
        manifest, config, out_dir, resume_from=cmd_opts.get("resume")
    )
    print(f"model: {Path(out_dir) / 'model.pt'}")
    print(f"metrics: {metrics_path}")
    return EXIT_OK


# -- transfer / remove ----------------------------------------------------------


def _run_video(opts: dict, bundle, reference, w: float) -> int:
    frames_dir = Path(_require(opts, "video_dir", "transfer"))
    if not frames_dir.is_dir():
        raise ConfigurationError(f"video directory not found: {frames_dir}")
    out_dir = Path(_require(opts, "out", "transfer"))
    blend = parse_bool("blend_bg", opts.get("blend_bg") or False)
    frame_paths = sorted(p for p in frames_dir.glob("*.png") if ".parsing" not in p.name)
    frames = []
    for p in frame_paths:
        try:
            frames.append(assets.load_asset_with_sidecars(p))
        except AssetError:
            frames.append(None)
    outputs = engine.video_transfer(frames, reference, bundle, blend_background=blend, w=w)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = 0
    for p, image in zip(frame_paths, outputs):
        if image is not None:
            assets.save_image(out_dir / p.name, image)
            written += 1
    print(f"frames written: {written} of {len(frame_paths)} -> {out_dir}")
    return EXIT_OK


def cmd_transfer(args) -> int:
    file_opts = _file_options(args, _TRANSFER_KEYS)
    opts = merge_options(file_opts, {k: getattr(args, k, None) for k in _TRANSFER_KEYS})

    remove_mode = parse_bool("remove", opts.get("remove") or False)
    alpha = opts.get("alpha")
    alpha = None if alpha is None else float(alpha)
    regions_raw = opts.get("regions")
    regions = None if regions_raw is None else _split_list(regions_raw)
    references = _split_list(opts.get("reference") or [])
    w = float(opts.get("w_visual") or engine.DEFAULT_VISUAL_WEIGHT)

    if remove_mode and (alpha is not None or regions is not None):
        raise ConfigurationError("remove mode cannot be combined with alpha or regions")
    bundle = load_checkpoint(_require(opts, "checkpoint", "transfer"))

    if opts.get("video_dir"):
        if remove_mode:
            raise ConfigurationError("remove mode has no video form")
        if len(references) != 1:
            raise ConfigurationError("video transfer takes exactly one reference")
        reference = assets.load_asset_with_sidecars(references[0], domain="makeup")
        return _run_video(opts, bundle, reference, w)

    source = assets.load_asset_with_sidecars(_require(opts, "source", "transfer"))
    out_path = Path(_require(opts, "out", "transfer"))
    if remove_mode:
        image = engine.remove(source, bundle)
    else:
        if not 1 <= len(references) <= 2:
            raise ConfigurationError("transfer needs one or two --reference images")
        refs = [assets.load_asset_with_sidecars(r, domain="makeup") for r in references]
        image = engine.run_transfer(
            source,
            refs,
            bundle,
            alpha=1.0 if alpha is None else alpha,
            regions=regions,
            w=w,
            dump_attention=opts.get("dump_attention"),
        )
    out_path.parent.mkdir(parents=True, exist_ok=True)
    assets.save_image(out_path, image)
    print(f"wrote {out_path}")
    return EXIT_OK


def cmd_remove(args) -> int:
    args.remove = True
    args.alpha = None
    args.regions = None
    args.reference = None
    args.video_dir = None
    args.blend_bg = None
    args.dump_attention = None
    args.w_visual = None
    return cmd_transfer(args)


# -- eval ----------------------------------------------------------------------


def cmd_eval(args) -> int:
    file_opts = _file_options(args, _EVAL_KEYS)
    opts = merge_options(file_opts, {k: getattr(args, k) for k in _EVAL_KEYS})
    bundle = load_checkpoint(_require(opts, "checkpoint", "eval"))
    manifest = assets.load_manifest(_require(opts, "manifest", "eval"))
    corpus = Corpus.from_manifest(manifest)
    if not corpus.plain or not corpus.styled:
        raise ConfigurationError("eval needs assets in both domains")
    report = write_eval_report(
        bundle, corpus.plain, corpus.styled, _require(opts, "out", "eval"),
        embedder=MeanPoolEmbedder(),
    )
    print(f"report: {report}")
    return EXIT_OK


# -- make-fixtures ---------------------------------------------------------------


def cmd_make_fixtures(args) -> int:
    seeds = [int(s) for s in _split_list(args.seeds)]
    if not seeds:
        raise ConfigurationError("make-fixtures needs at least one seed")
    manifest_path = write_fixture_corpus(args.out, seeds, args.size)
    print(f"manifest: {manifest_path}")
    return EXIT_OK


# -- parser ----------------------------------------------------------------------


def _add_transfer_flags(p: _Parser, with_modes: bool) -> None:
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--checkpoint", help="model checkpoint to load")
    p.add_argument("--source", help="source face image (sidecar metadata expected)")
    p.add_argument("--out", help="output PNG path (or directory for video)")
    if with_modes:
        p.add_argument("--reference", action="append", help="reference image, repeatable (max 2)")
        p.add_argument("--alpha", type=float, help="makeup degree in [0, 1]")
        p.add_argument("--regions", help="comma list from {lip,skin,eye}; empty keeps none")
        p.add_argument("--remove", action="store_const", const=True, help="strip makeup instead")
        p.add_argument("--video-dir", dest="video_dir", help="directory of ordered PNG frames")
        p.add_argument("--blend-bg", dest="blend_bg", action="store_const", const=True,
                       help="copy background pixels from each source frame")
        p.add_argument("--dump-attention", dest="dump_attention",
                       help="directory for attention heatmap debug dumps")
        p.add_argument("--w-visual", dest="w_visual", type=float,
                       help="visual feature weight inside attention")


def build_parser() -> _Parser:
    parser = _Parser(prog="makeover", description=__doc__)
    sub = parser.add_subparsers(dest="command")

    p_train = sub.add_parser("train", parents=[], help="train a model from a manifest")
    p_train.add_argument("--config", help="key=value config file")
    p_train.add_argument("--manifest", help="JSON-lines asset manifest")
    p_train.add_argument("--out", help="output directory for checkpoints and metrics")
    p_train.add_argument("--resume", help="checkpoint to resume from")
    p_train.add_argument("--seed", type=int)
    p_train.add_argument("--epochs", type=int)
    p_train.add_argument("--batch-size", dest="batch_size", type=int)
    p_train.add_argument("--image-size", dest="image_size", type=int)
    p_train.add_argument("--learning-rate", dest="learning_rate", type=float)
    p_train.add_argument("--betas", help="two comma-separated Adam betas")
    p_train.add_argument("--w-visual", dest="w_visual", type=float)
    p_train.add_argument("--checkpoint-interval", dest="checkpoint_interval", type=int)
    p_train.add_argument("--base-width", dest="base_width", type=int)
    p_train.add_argument("--max-steps", dest="max_steps", type=int)
    p_train.add_argument("--perceptual-features", dest="perceptual_features",
                         help="identity (built-in) or vgg16 (downloaded weights)")
    p_train.add_argument("--weight-adversarial", dest="weight_adversarial", type=float)
    p_train.add_argument("--weight-cycle", dest="weight_cycle", type=float)
    p_train.add_argument("--weight-perceptual", dest="weight_perceptual", type=float)
    p_train.add_argument("--weight-region", dest="weight_region", type=float)
    p_train.add_argument("--weight-detail", dest="weight_detail", type=float)
    p_train.set_defaults(func=cmd_train)

    p_transfer = sub.add_parser("transfer", help="apply makeup from reference(s)")
    _add_transfer_flags(p_transfer, with_modes=True)
    p_transfer.set_defaults(func=cmd_transfer)

    p_remove = sub.add_parser("remove", help="strip makeup (shorthand for transfer --remove)")
    _add_transfer_flags(p_remove, with_modes=False)
    p_remove.set_defaults(func=cmd_remove)

    p_eval = sub.add_parser("eval", help="metrics report over all manifest pairs")
    p_eval.add_argument("--config", help="key=value config file")
    p_eval.add_argument("--checkpoint")
    p_eval.add_argument("--manifest")
    p_eval.add_argument("--out", help="JSON-lines report path")
    p_eval.set_defaults(func=cmd_eval)

    p_fix = sub.add_parser("make-fixtures", help="write a synthetic face corpus")
    p_fix.add_argument("--out", required=True)
    p_fix.add_argument("--seeds", default="0,1", help="comma list of geometry seeds")
    p_fix.add_argument("--size", type=int, default=64, choices=(64, 256))
    p_fix.set_defaults(func=cmd_make_fixtures)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if not getattr(args, "func", None):
        parser.print_help()
        return EXIT_USAGE
    try:
        return args.func(args)
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigurationError, AssetError, CheckpointError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
