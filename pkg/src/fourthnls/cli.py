"""Command-line entry point.

Exit codes: 0 every binding verdict passed, 1 some verdict failed, 2 usage or
configuration error, 3 numerical blow-up.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .config import ConfigError, load_config
from .dynamics import BlowUpError
from .experiments import run_evolution, run_experiment
from .io import CheckpointError, inspect_checkpoint, write_checkpoint, write_report

__all__ = ["main", "EXIT_PASS", "EXIT_FAIL", "EXIT_USAGE", "EXIT_BLOWUP"]

EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_BLOWUP = 0, 1, 2, 3

STUDY_COMMANDS = ("run", "conserve", "identity-check", "acl-sweep", "morawetz", "lemma1", "scatter-proxy")


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fourthnls", description="Fourth-order NLS laboratory")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True
    for name in STUDY_COMMANDS:
        p = sub.add_parser(name, help=f"{name} study")
        p.add_argument("--config", required=True, type=Path, help="INI experiment config")
        p.add_argument("--out", type=Path, default=None, help="directory for the JSON report and CSV tables")
        p.add_argument("--seed", type=int, default=None, help="override data.seed")
        p.add_argument("--threads", type=int, default=1, help="parallel width for seed sweeps")
        p.add_argument("--json", action="store_true", help="print the report to stdout")
    p = sub.add_parser("inspect-checkpoint", help="print a checkpoint header")
    p.add_argument("path", type=Path)
    p.add_argument("--json", action="store_true", help="print the header as JSON")
    return parser


def _err(msg: str):
    print(f"fourthnls: {msg}", file=sys.stderr)


def _inspect(args) -> int:
    try:
        meta = inspect_checkpoint(args.path)
    except (OSError, CheckpointError) as exc:
        _err(str(exc))
        return EXIT_USAGE
    if args.json:
        print(json.dumps(meta, indent=2))
    else:
        for k, v in meta.items():
            print(f"{k}: {v}")
    return EXIT_PASS


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_PASS
    if args.command == "inspect-checkpoint":
        return _inspect(args)

    try:
        config = load_config(args.config)
    except OSError as exc:
        _err(f"cannot read config: {exc}")
        return EXIT_USAGE
    except ConfigError as exc:
        _err(f"invalid config: {exc}")
        return EXIT_USAGE
    if config.kind != args.command:
        _err(f"config kind {config.kind!r} does not match command {args.command!r}")
        return EXIT_USAGE
    if args.seed is not None:
        if not 0 <= args.seed < 2**64:
            _err("--seed must be a 64-bit unsigned integer")
            return EXIT_USAGE
        config = config.with_seed(args.seed)
    if args.threads < 1:
        _err("--threads must be >= 1")
        return EXIT_USAGE
    out = args.out or (Path(config.output) if config.output else None)
    if out is not None:
        config = replace(config, output=str(out))

    trajectory = None
    try:
        if config.kind == "run":
            report, trajectory = run_evolution(config)
        else:
            report = run_experiment(config, threads=args.threads)
    except BlowUpError as exc:
        _err(f"numerical blow-up: {exc}")
        return EXIT_BLOWUP
    except (ValueError, MemoryError) as exc:
        _err(f"precondition failed: {exc}")
        return EXIT_USAGE

    if out is not None:
        paths = write_report(report, out)
        if trajectory is not None:
            last = len(trajectory) - 1
            paths.append(
                write_checkpoint(
                    out / "run_final.ckpt",
                    trajectory.fields[last],
                    trajectory.times[last],
                    config.dt,
                    trajectory.steps,
                )
            )
        for p in paths:
            print(f"wrote {p}", file=sys.stderr)
    if args.json:
        sys.stdout.write(report.to_json())
    for v in report.verdicts:
        mark = "ok  " if v.passed else ("FAIL" if v.binding else "note")
        print(f"[{mark}] {v.name}: {v.value} {v.op} {v.threshold}", file=sys.stderr)
    if report.error:
        _err(report.error)
        return EXIT_BLOWUP if report.error.startswith("blow-up") else EXIT_FAIL
    return EXIT_PASS if report.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
