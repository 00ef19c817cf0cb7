"""Argument helpers shared by the subcommand modules."""

import argparse
import json
import sys
from typing import Any, Dict, List, Optional, Tuple

from errors import ConfigInvalid

# argparse dest prefix for flags that override a RunConfig path
CONFIG_PREFIX = "cfg:"


def common_options() -> argparse.ArgumentParser:
    """Options every subcommand accepts."""
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--config", default=None, help="YAML run config; explicit flags override it")
    parent.add_argument("--log-level", default=None, help="Logging level (default: config log_level)")
    parent.add_argument("--json", action="store_true", help="Machine-readable JSON on stdout")
    return parent


def add_command(subparsers, name: str, help_text: str) -> argparse.ArgumentParser:
    return subparsers.add_parser(name, help=help_text, description=help_text, parents=[common_options()])


def config_arg(parser: argparse.ArgumentParser, *flags: str, path: str, **kwargs) -> None:
    """Flag whose value, when given, overrides `path` in the run config."""
    parser.add_argument(*flags, dest=CONFIG_PREFIX + path, default=None, **kwargs)


def collect_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    return {
        name[len(CONFIG_PREFIX):]: value
        for name, value in vars(args).items()
        if name.startswith(CONFIG_PREFIX)
    }


def int_list(text: str) -> List[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def float_list(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def size_pair(text: str) -> Tuple[int, int]:
    """`987x987` -> (width, height)."""
    try:
        width, height = (int(v) for v in text.lower().split("x"))
        return width, height
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected WIDTHxHEIGHT, got {text!r}")


def float_range(text: str) -> Tuple[float, float]:
    """`-0.1:0.1` -> (-0.1, 0.1). Pass negative ranges as `--flag=-0.1:0.1`."""
    try:
        lo, hi = (float(v) for v in text.split(":"))
        return lo, hi
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LOW:HIGH, got {text!r}")


def rect(text: str) -> Tuple[int, int, int, int]:
    try:
        x, y, w, h = (int(v) for v in text.split(","))
        return x, y, w, h
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected X,Y,W,H, got {text!r}")


def ratios(text: str) -> Dict[str, float]:
    values = float_list(text)
    if len(values) != 3:
        raise argparse.ArgumentTypeError(f"expected TRAIN,TEST,VAL fractions, got {text!r}")
    return dict(zip(("train", "test", "val"), values))


def require(value: Optional[Any], flag: str) -> Any:
    if value in (None, ""):
        raise ConfigInvalid(f"{flag} is required (flag or run config)")
    return value


def emit(args: argparse.Namespace, payload: Any, text: Optional[str] = None) -> None:
    """Print JSON when --json was given, otherwise the human-readable text."""
    if args.json:
        json.dump(payload, sys.stdout, sort_keys=True)
        sys.stdout.write("\n")
    elif text:
        print(text)
