import os

from pydantic import ValidationError

from cli.common import add_command, config_arg, emit, rect, require, size_pair
from config import provenance
from errors import BadTarget, ConfigInvalid
from models.image import DensityMode, Interpolation, Normalize, PreprocessConfig
from repositories.manifest_store import load_manifest, save_manifest
from services.preprocess_service import preprocess_manifest


def register(subparsers) -> None:
    parser = add_command(subparsers, "preprocess", "Crop, remove gridlines and resize every manifest image")
    config_arg(parser, "--manifest", path="manifest")
    config_arg(parser, "--crop", path="preprocess.crop_rect", type=rect, help="Frame rectangle X,Y,W,H")
    config_arg(parser, "--threshold", path="preprocess.threshold", type=float,
               help="Ink density below which pixels become background")
    config_arg(parser, "--density-mode", path="preprocess.density_mode", type=str.upper, choices=[m.value for m in DensityMode])
    config_arg(parser, "--target", path="preprocess.target", type=size_pair, help="Output size WIDTHxHEIGHT")
    config_arg(parser, "--interpolation", path="preprocess.interpolation", type=str.upper,
               choices=[i.value for i in Interpolation])
    config_arg(parser, "--normalize", path="preprocess.normalize", type=str.upper, choices=[n.value for n in Normalize])
    config_arg(parser, "--out-dir", path="preprocess.out_dir", help="Directory for cleaned PNGs")
    parser.add_argument("--out", default=None, help="Updated manifest (default: <out-dir>/manifest.jsonl)")
    parser.set_defaults(handler=run)


def build_config(cfg) -> PreprocessConfig:
    block = cfg.preprocess
    if min(block.target) <= 0:
        raise BadTarget(f"target size must be positive, got {block.target[0]}x{block.target[1]}")
    try:
        return PreprocessConfig(
            crop_rect=block.crop_rect,
            density_threshold=block.threshold,
            density_mode=block.density_mode,
            target_size=block.target,
            interpolation=block.interpolation,
            normalize=block.normalize,
        )
    except ValidationError as e:
        raise ConfigInvalid(f"preprocess settings: {e}") from e


def run(args, cfg) -> int:
    source = require(cfg.manifest, "--manifest")
    out_dir = require(cfg.preprocess.out_dir, "--out-dir")
    out = args.out or os.path.join(out_dir, "manifest.jsonl")

    manifest = preprocess_manifest(load_manifest(source), build_config(cfg), out_dir)
    digest = save_manifest(manifest, out, provenance(cfg, command="preprocess", source_manifest=source))
    emit(args, {"manifest": out, "manifest_hash": digest, "records": len(manifest.records)},
         f"Preprocessed {len(manifest.records)} images; manifest at {out}")
    return 0
