import argparse
import logging

from cli.common import add_command, config_arg, emit, float_list, int_list, require
from cli.report import show_trials
from config import provenance
from models.backbone import BackboneName
from repositories.manifest_store import load_manifest, manifest_hash
from repositories.trial_store import TrialStore
from services.report_service import format_table, trial_table
from services.search_service import rank_trials, run_grid_search

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = add_command(subparsers, "gridsearch", "Cross-validated grid search over head hyperparameters")
    config_arg(parser, "--manifest", path="manifest")
    config_arg(parser, "--backbone", path="model.backbone", type=str.upper, choices=[b.value for b in BackboneName])
    config_arg(parser, "--epochs", path="search.grid.epochs_set", type=int_list)
    config_arg(parser, "--batch", path="search.grid.batch_set", type=int_list)
    config_arg(parser, "--dropout", path="search.grid.dropout_set", type=float_list)
    config_arg(parser, "--neurons", path="search.grid.neurons_set", type=int_list)
    config_arg(parser, "--lr", path="search.grid.lr_set", type=float_list)
    config_arg(parser, "--k", path="search.k", type=int)
    config_arg(parser, "--seed", path="seed", type=int)
    config_arg(parser, "--workers", path="search.workers", type=int)
    config_arg(parser, "--executor", path="search.executor", choices=["local", "celery"])
    config_arg(parser, "--trainer", path="search.trainer", help="Trainer reference module:function")
    config_arg(parser, "--store", path="search.store", help="Append-only trial store (JSON Lines)")
    config_arg(parser, "--retry-failed", path="search.retry_failed", action="store_true",
               help="Re-run trials recorded as FAILED")
    config_arg(parser, "--pretrained", path="model.pretrained", action=argparse.BooleanOptionalAction,
               help="Load ImageNet weights in the trainer (--no-pretrained for random weights)")
    parser.set_defaults(handler=run)

    actions = parser.add_subparsers(dest="action", metavar="ACTION")
    report = actions.add_parser("report", help="Print the trial table of a store")
    report.add_argument("--store", dest="report_store", required=True)
    report.add_argument("--json", dest="report_json", action="store_true")
    report.set_defaults(handler=run_report)


def run(args, cfg) -> int:
    from models.backbone import BackboneSpec

    manifest_path = require(cfg.manifest, "--manifest")
    search = cfg.search
    if search.executor == "celery":
        from observability import instrument_clients
        instrument_clients()

    manifest = load_manifest(manifest_path)
    store = None
    if search.store:
        store = TrialStore(search.store, provenance(
            cfg, include_config=False, command="gridsearch", manifest_hash=manifest_hash(manifest)))

    results, best = run_grid_search(
        search.grid,
        BackboneSpec(name=cfg.model.backbone, pretrained=cfg.model.pretrained),
        manifest,
        search.k,
        cfg.seed,
        store=store,
        workers=search.workers,
        executor=search.executor,
        retry_failed=search.retry_failed,
        manifest_path=manifest_path,
        trainer_ref=search.trainer,
    )
    ranked = rank_trials(results)
    payload = {
        "best": best.model_dump() if best else None,
        "trials": len(results),
        "failed": sum(1 for r in results if not r.ok),
        "ranking": [r.key for r in ranked],
        "store": search.store,
    }
    text = format_table(trial_table(results))
    if best:
        text += f"\n\nBest: {best.model_dump()}"
    emit(args, payload, text)
    return 0


def run_report(args, cfg) -> int:
    args.json = args.json or args.report_json
    return show_trials(args, args.report_store)
