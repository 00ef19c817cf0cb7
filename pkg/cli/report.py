import os

import pandas as pd

from cli.common import add_command, config_arg, emit
from config import provenance
from errors import ConfigInvalid, EmptyResults
from repositories.report_store import load_report
from repositories.trial_store import TrialStore
from services.report_service import (
    COMPARISON_COLUMNS, compare_models, format_table, records_for_json, summarize_reports, trial_table, write_comparison,
)
from services.search_service import rank_trials


def register(subparsers) -> None:
    parser = add_command(subparsers, "compare", "Rank evaluation reports and write comparison table and chart")
    config_arg(parser, "--reports", path="reports", nargs="+", help="EvalReport JSON files")
    parser.add_argument("--out", required=True, help="Comparison CSV; chart data and PNG are written beside it")
    parser.add_argument("--no-plot", action="store_true", help="Skip the PNG chart")
    parser.set_defaults(handler=run_compare)

    parser = add_command(subparsers, "report", "Print a trial store table or a summary of evaluation reports")
    source = parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--store", help="Grid-search trial store")
    source.add_argument("--reports", nargs="+", help="EvalReport JSON files")
    parser.set_defaults(handler=run_report)


def show_trials(args, store_path: str) -> int:
    if not os.path.exists(store_path):
        raise ConfigInvalid(f"trial store {store_path} does not exist")
    results = TrialStore(store_path).all()
    if not results:
        raise EmptyResults(f"trial store {store_path} has no readable trials")
    table = trial_table(results)
    best = rank_trials(results)[0]
    emit(args, {
        "rows": records_for_json(table),
        "best": best.params.model_dump() if best.ok else None,
    }, format_table(table))
    return 0


def run_compare(args, cfg) -> int:
    if not cfg.reports:
        raise ConfigInvalid("--reports is required (flag or run config)")
    comparison = compare_models([load_report(path) for path in cfg.reports])
    comparison["chart"]["provenance"] = provenance(cfg, command="compare")
    paths = write_comparison(comparison, args.out, plot=not args.no_plot)
    emit(args, {"table": comparison["table"], "selected": comparison["selected"], "outputs": paths},
         format_table(pd.DataFrame(comparison["table"], columns=COMPARISON_COLUMNS)))
    return 0


def run_report(args, cfg) -> int:
    if args.store:
        return show_trials(args, args.store)
    frame = summarize_reports([load_report(path) for path in args.reports])
    emit(args, records_for_json(frame), format_table(frame))
    return 0
