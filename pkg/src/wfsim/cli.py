"""Command-line entry point for batch scenario runs.

Configuration comes from an optional JSON file plus flags; a flag always
wins over the file.  Exit codes: 0 success, 2 invalid configuration
(message names the offending file line when one exists), 3 a physics
invariant failed during the run, 4 the output path was not writable.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .errors import ConfigError, InvariantViolation
from .report import ENV_OUT_DIR, SCENARIOS, ScenarioConfig, emit, run

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INVARIANT = 3
EXIT_UNWRITABLE = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wfsim",
        description="Run an observer-chain scenario and write a quantity report.",
        epilog=(
            "When --out and output_path are absent, files land in "
            f"${ENV_OUT_DIR} if set, else the working directory."
        ),
    )
    parser.add_argument("--config", metavar="FILE", help="JSON configuration file")
    parser.add_argument("--scenario", choices=SCENARIOS, help="which scenario to run")
    parser.add_argument(
        "--hypotheses",
        metavar="LIST",
        help="comma-separated collapse hypotheses, e.g. "
        "'unitary_only,stochastic_collapse(0.5)'",
    )
    parser.add_argument("--seed", type=int, help="seed for the master random stream")
    parser.add_argument(
        "--shots", type=int, help="samples per measurement setting (0 = exact only)"
    )
    parser.add_argument(
        "--grid-step",
        type=float,
        dest="grid_step",
        help="angular resolution of the settings search, in (0, pi/8]",
    )
    parser.add_argument(
        "--format",
        choices=("csv", "json"),
        dest="output_format",
        help="report format",
    )
    parser.add_argument("--out", dest="output_path", help="output file path")
    parser.add_argument(
        "--threads",
        type=int,
        help="worker threads for the settings search and sampling "
        "(default: all cores); results do not depend on it",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    return parser


def _load_config_file(path: str) -> tuple[dict, dict[str, int]]:
    """Parse a JSON config file and map each top-level key to its line."""
    try:
        text = open(path, encoding="utf-8").read()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config file: {exc}") from exc
    try:
        mapping = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}: {exc.msg}") from exc
    if not isinstance(mapping, dict):
        raise ConfigError(f"{path}:1: the top level must be a JSON object")
    lines: dict[str, int] = {}
    for key in mapping:
        probe = f'"{key}"'
        pos = text.find(probe)
        if pos >= 0:
            lines[key] = text.count("\n", 0, pos) + 1
    return mapping, lines


_OVERRIDE_FLAGS = (
    "scenario",
    "hypotheses",
    "seed",
    "shots",
    "grid_step",
    "output_format",
    "output_path",
    "threads",
)


def load_config(args: argparse.Namespace) -> ScenarioConfig:
    """Merge the config file (if any) with flag overrides; flags win."""
    if args.config:
        mapping, lines = _load_config_file(args.config)
        source = args.config
    else:
        mapping, lines, source = {}, {}, "<flags>"
    for name in _OVERRIDE_FLAGS:
        value = getattr(args, name)
        if value is not None:
            mapping[name] = value
            lines.pop(name, None)
    return ScenarioConfig.from_mapping(mapping, lines, source)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        report = run(config)
    except InvariantViolation as exc:
        print(f"error: invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    try:
        out_path = emit(report)
    except OSError as exc:
        print(f"error: cannot write report: {exc}", file=sys.stderr)
        return EXIT_UNWRITABLE
    print(f"wrote {len(report.rows)} rows to {out_path}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
