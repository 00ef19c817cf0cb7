import argparse
import os

from cli.common import add_command, config_arg, emit, float_range, require
from config import provenance
from models.dataset import Split
from repositories.manifest_store import load_manifest, save_manifest
from services.augment_service import augment_split


def register(subparsers) -> None:
    parser = add_command(subparsers, "augment", "Add seeded augmented copies of the TRAIN images")
    config_arg(parser, "--manifest", path="manifest")
    config_arg(parser, "--copies", path="augment.spec.copies_per_image", type=int)
    config_arg(parser, "--brightness", path="augment.spec.brightness_delta", type=float_range,
               help="Additive brightness range LOW:HIGH (write --brightness=-0.1:0.1)")
    config_arg(parser, "--zoom", path="augment.spec.zoom", type=float_range, help="Zoom factor range LOW:HIGH")
    config_arg(parser, "--hflip", path="augment.spec.mirror_horizontal", action=argparse.BooleanOptionalAction)
    config_arg(parser, "--vflip", path="augment.spec.mirror_vertical", action=argparse.BooleanOptionalAction)
    config_arg(parser, "--seed", path="augment.spec.seed", type=int)
    config_arg(parser, "--out-dir", path="augment.out_dir", help="Directory for augmented PNGs")
    parser.add_argument("--out", default=None, help="Updated manifest (default: <out-dir>/manifest.jsonl)")
    parser.set_defaults(handler=run)


def run(args, cfg) -> int:
    source = require(cfg.manifest, "--manifest")
    out_dir = require(cfg.augment.out_dir, "--out-dir")
    out = args.out or os.path.join(out_dir, "manifest.jsonl")

    manifest = load_manifest(source)
    before = len(manifest.records)
    manifest = augment_split(manifest, cfg.augment.spec, out_dir)
    digest = save_manifest(manifest, out, provenance(cfg, command="augment", source_manifest=source))
    added = len(manifest.records) - before
    emit(args, {
        "manifest": out,
        "manifest_hash": digest,
        "added": added,
        "train_records": len(manifest.split_records(Split.TRAIN)),
    }, f"Added {added} augmented records; manifest at {out}")
    return 0
