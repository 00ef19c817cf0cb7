"""
Command-line entry point for the ECG scan COVID-19 classification pipeline.

    python main.py <command> [options]

Exit codes: 0 success, 1 pipeline error (one JSON line on stderr),
2 usage error.
"""

import argparse
import json
import logging
import sys
from typing import List, Optional

from cli import COMMAND_MODULES
from cli.common import collect_overrides
from config import SERVICE_VERSION, apply_overrides, load_run_config
from errors import PipelineError
from metrics import dump_metrics
from observability import setup_opentelemetry

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="main.py",
        description="Detect COVID-19 from scanned ECG sheets with pretrained CNN backbones",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {SERVICE_VERSION}")
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)
    for module in COMMAND_MODULES:
        module.register(subparsers)
    return parser


def _fail(code: str, message: str) -> int:
    sys.stderr.write(json.dumps({"error": code, "message": message}) + "\n")
    return 1


def dispatch(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        # argparse exits 0 for --help/--version and 2 for usage errors
        return e.code if isinstance(e.code, int) else 2

    try:
        cfg = apply_overrides(load_run_config(args.config), collect_overrides(args))
        logging.basicConfig(level=(args.log_level or cfg.log_level).upper(), force=True)
        setup_opentelemetry()
        logger.info(f"Running {args.command} (seed {cfg.seed})")
        return args.handler(args, cfg)
    except PipelineError as e:
        logger.error(f"{args.command} failed: {e.code}: {e.message}")
        return _fail(e.code, e.message)
    except Exception as e:
        logger.exception(f"{args.command} crashed: {e}")
        return _fail("InternalError", str(e))
    finally:
        dump_metrics()


if __name__ == "__main__":
    sys.exit(dispatch())
