#!/usr/bin/env python3
"""
TimeKD - Command Line Interface.

Usage:
    timekd ingest --config run.yaml
    timekd train-teacher --config run.yaml --set teacher_epochs=5
    timekd distill --config run.yaml
    timekd evaluate --config run.yaml --checkpoint runs/default/student.tkds
    timekd forecast --config run.yaml --checkpoint runs/default/student.tkds --input recent.csv
    timekd report --config run.yaml

Environment Variables:
    TIMEKD_LOG_LEVEL: overrides the configured log level
    TIMEKD_OUTPUT_DIR: overrides the configured output directory
"""

import argparse
import json
import logging
import sys
from collections.abc import Sequence

from pydantic import ValidationError

from .config import Settings, parse_assignment
from .config.settings import validation_message
from .core import TimeKDPipeline
from .errors import ConfigError, TimeKDError

logger = logging.getLogger(__name__)

COMMANDS = ("ingest", "train-teacher", "distill", "evaluate", "forecast", "report")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="timekd",
        description="Privileged knowledge distillation for multivariate forecasting.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in COMMANDS:
        sub = subparsers.add_parser(command)
        sub.add_argument("--config", help="YAML or key = value configuration file")
        sub.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override one configuration key (repeatable)",
        )
        if command in ("evaluate", "forecast", "report"):
            sub.add_argument("--checkpoint", help="student checkpoint (.tkds)")
        if command == "evaluate":
            sub.add_argument("--dataset", help="evaluate on another CSV with the same variables")
        if command == "forecast":
            sub.add_argument("--input", required=True, help="CSV whose last rows form the history")
            sub.add_argument("--output", help="forecast CSV path")
    return parser


def load_settings(args: argparse.Namespace) -> Settings:
    settings = Settings.from_file(args.config)
    if args.overrides:
        settings = settings.with_overrides(dict(parse_assignment(o) for o in args.overrides))
    return settings


def _print_block(title: str, body: str) -> None:
    print("\n" + "=" * 80)
    print(title)
    print("=" * 80)
    print(body)


def dispatch(pipeline: TimeKDPipeline, args: argparse.Namespace) -> None:
    command = args.command
    if command == "ingest":
        summary = pipeline.ingest()
        _print_block("DATASET", json.dumps(summary.model_dump(), indent=2))
    elif command == "train-teacher":
        summary = pipeline.train_teacher()
        _print_block("TEACHER", json.dumps(summary.model_dump(), indent=2))
    elif command == "distill":
        summary = pipeline.distill()
        _print_block(summary.stage.upper(), json.dumps(summary.model_dump(), indent=2))
    elif command == "evaluate":
        report = pipeline.evaluate(args.checkpoint, args.dataset)
        _print_block("METRICS", report.to_table().rstrip())
    elif command == "forecast":
        path = pipeline.forecast(args.input, args.checkpoint, args.output)
        _print_block("FORECAST", str(path))
    elif command == "report":
        paths = pipeline.report(args.checkpoint)
        _print_block("REPORT", "\n".join(str(p) for p in paths))


def _from_validation(error: ValidationError) -> TimeKDError:
    """Recover a TimeKD error raised inside a pydantic validator."""
    for detail in error.errors():
        original = detail.get("ctx", {}).get("error")
        if isinstance(original, TimeKDError):
            return original
    return ConfigError(validation_message(error))


def _fail(error: TimeKDError) -> int:
    logger.error(f"{type(error).__name__}: {error}")
    print(error.one_line(), file=sys.stderr)
    return error.exit_code


def run(argv: Sequence[str] | None = None) -> int:
    """Run one subcommand and return its exit code."""
    args = build_parser().parse_args(argv)
    try:
        settings = load_settings(args)

        # Configure logging based on settings
        logging.basicConfig(
            level=getattr(logging, settings.log_level.upper()),
            format=settings.log_format,
            force=True,
        )
    except ValidationError as e:
        for error in e.errors():
            field = error["loc"][0] if error["loc"] else "unknown"
            logger.error(f"Configuration error for '{field}': {error['msg']}")
        return _fail(_from_validation(e))
    except TimeKDError as e:
        return _fail(e)

    pipeline = TimeKDPipeline(settings)
    try:
        dispatch(pipeline, args)
    except TimeKDError as e:
        return _fail(e)
    except ValidationError as e:
        return _fail(_from_validation(e))
    except Exception as e:
        logger.error(f"Pipeline failed: {e}", exc_info=True)
        return _fail(TimeKDError(str(e)))
    return 0


def main():
    """Synchronous entry point for CLI (used by setuptools entry_points)."""
    sys.exit(run())


if __name__ == "__main__":
    main()
