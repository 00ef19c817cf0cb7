import argparse
import logging

from cli.common import add_command, config_arg, emit, ratios, require
from config import DATA_ROOT, provenance
from errors import ConfigInvalid
from repositories.manifest_store import save_manifest
from services.dataset_service import apply_folds, assign_splits, ingest_dataset, kfold_partition, parse_label_rule

logger = logging.getLogger(__name__)


def _label_rule(text: str):
    try:
        return parse_label_rule(text)
    except ConfigInvalid as e:
        raise argparse.ArgumentTypeError(e.message)


def register(subparsers) -> None:
    parser = add_command(subparsers, "ingest", "Scan a labelled image tree, split it and write a manifest")
    config_arg(parser, "--root", path="dataset.root", help="Dataset root (default: $ECG_DATA_ROOT)")
    config_arg(parser, "--labels", path="dataset.labels", type=_label_rule,
               help="Directory-to-label rule, e.g. covid=COVID,normal=NON_COVID,other=SKIP")
    config_arg(parser, "--seed", path="seed", type=int)
    config_arg(parser, "--ratios", path="dataset.ratios", type=ratios, help="TRAIN,TEST,VAL fractions")
    config_arg(parser, "--k", path="dataset.k", type=int, help="Cross-validation folds over TRAIN")
    config_arg(parser, "--out", path="manifest", help="Manifest path (JSON Lines)")
    parser.add_argument("--no-split", action="store_true", help="Write the manifest without split assignment")
    parser.set_defaults(handler=run)


def run(args, cfg) -> int:
    root = require(cfg.dataset.root or DATA_ROOT, "--root")
    out = require(cfg.manifest, "--out")

    manifest = ingest_dataset(root, cfg.dataset.labels, seed=cfg.seed)
    if not args.no_split:
        manifest = assign_splits(manifest, cfg.dataset.ratios, cfg.seed)
        manifest = apply_folds(manifest, kfold_partition(manifest, cfg.dataset.k, cfg.seed))
    digest = save_manifest(manifest, out, provenance(cfg, command="ingest"))

    summary = {
        "manifest": out,
        "manifest_hash": digest,
        "records": len(manifest.records),
        "class_counts": {label.value: n for label, n in manifest.class_counts.items()},
        "warnings": list(manifest.warnings),
    }
    emit(args, summary, f"Wrote {len(manifest.records)} records to {out}")
    return 0
