"""`train` and `evaluate`. TensorFlow is imported only when one of them runs."""

import argparse
import os

from cli.common import add_command, config_arg, emit, require
from config import provenance
from models.backbone import BackboneName, Mode, PolicyKind
from repositories.manifest_store import load_manifest, manifest_hash


def register(subparsers) -> None:
    parser = add_command(subparsers, "train", "Train a backbone + head on TRAIN, validating on VAL")
    config_arg(parser, "--manifest", path="manifest")
    config_arg(parser, "--backbone", path="model.backbone", type=str.upper, choices=[b.value for b in BackboneName])
    config_arg(parser, "--mode", path="model.mode", type=str.upper, choices=[m.value for m in Mode])
    config_arg(parser, "--policy", path="model.policy", type=str.lower, choices=[p.value for p in PolicyKind],
               help="Which part of the backbone fine-tuning unfreezes")
    config_arg(parser, "--n-layers", path="model.n_layers", type=int, help="Layer count for last_n_layers")
    config_arg(parser, "--pretrained", path="model.pretrained", action=argparse.BooleanOptionalAction,
               help="Load ImageNet weights (--no-pretrained starts from random weights)")
    config_arg(parser, "--epochs", path="train.epochs", type=int)
    config_arg(parser, "--batch", path="train.batch_size", type=int)
    config_arg(parser, "--dropout", path="train.dropout", type=float)
    config_arg(parser, "--neurons", path="train.neurons", type=int)
    config_arg(parser, "--lr", path="train.learning_rate", type=float)
    config_arg(parser, "--seed", path="seed", type=int)
    config_arg(parser, "--checkpoint", path="train.checkpoint", help="Output checkpoint directory")
    parser.add_argument("--no-plot", action="store_true", help="Skip the training-curve PNG")
    parser.set_defaults(handler=run_train)

    parser = add_command(subparsers, "evaluate", "Score a checkpoint on the TEST split")
    config_arg(parser, "--checkpoint", path="train.checkpoint")
    config_arg(parser, "--manifest", path="manifest")
    config_arg(parser, "--threshold", path="train.threshold", type=float)
    config_arg(parser, "--seed", path="seed", type=int)
    parser.add_argument("--report", required=True, help="EvalReport JSON output")
    parser.add_argument("--plot", action="store_true", help="Also write a confusion-matrix PNG next to the report")
    parser.set_defaults(handler=run_evaluate)


def run_train(args, cfg) -> int:
    from models.backbone import FineTunePolicy, HeadConfig
    from models.search import HyperParams
    from repositories.checkpoint_store import write_history
    from services.model_zoo import backbone_spec, build_model, save_checkpoint
    from services.report_service import plot_history
    from services.train_service import train

    source = require(cfg.manifest, "--manifest")
    checkpoint = require(cfg.train.checkpoint, "--checkpoint")
    t = cfg.train
    params = HyperParams(epochs=t.epochs, batch_size=t.batch_size, dropout=t.dropout,
                         neurons=t.neurons, learning_rate=t.learning_rate)

    manifest = load_manifest(source)
    model = build_model(
        backbone_spec(cfg.model.backbone, cfg.model.pretrained),
        HeadConfig(neurons=params.neurons, dropout=params.dropout),
        mode=cfg.model.mode,
        policy=FineTunePolicy(kind=cfg.model.policy, n_layers=cfg.model.n_layers),
        seed=cfg.seed,
    )
    model, history = train(model, manifest, params, cfg.seed)
    save_checkpoint(model, checkpoint, provenance(cfg, command="train", source_manifest=source))
    write_history(checkpoint, history)
    if not args.no_plot:
        plot_history(history, os.path.join(checkpoint, "history.png"), title=model.model_id)

    summary = {
        "checkpoint": checkpoint,
        "model_id": model.model_id,
        "mode": model.mode.value,
        "epochs_run": history.epochs_run,
        "trainable_params": model.trainable_param_count,
        "total_params": model.total_param_count,
        "final_val_accuracy": history.val_accuracy[-1] if history.epochs_run else None,
    }
    emit(args, summary, f"Trained {model.model_id} for {history.epochs_run} epochs; checkpoint at {checkpoint}")
    return 0


def run_evaluate(args, cfg) -> int:
    from repositories.report_store import save_report
    from services.model_zoo import load_checkpoint
    from services.report_service import plot_confusion
    from services.train_service import evaluate

    source = require(cfg.manifest, "--manifest")
    checkpoint = require(cfg.train.checkpoint, "--checkpoint")

    manifest = load_manifest(source)
    model = load_checkpoint(checkpoint)
    report = evaluate(model, manifest, threshold=cfg.train.threshold, seed=cfg.seed)
    report = report.model_copy(update={"provenance": provenance(
        cfg, command="evaluate", checkpoint=checkpoint, source_manifest=source,
        manifest_hash=manifest_hash(manifest),
        training=model.provenance,
    )})
    save_report(report, args.report)
    if args.plot:
        stem, _ = os.path.splitext(args.report)
        plot_confusion(report, stem + "_confusion.png")

    emit(args, report.model_dump(mode="json", exclude={"provenance"}),
         f"{report.model_id}: accuracy {report.accuracy:.4f}, loss {report.loss:.4f} on {report.n_test} test images")
    return 0
