"""
Command-line entry point: ``glassflow <command> [options]``.
"""

import argparse
import json
import logging
import math
import sys
from typing import Any, Dict, List, Optional

from . import core
from .agent.checkpoint import CheckpointError
from .agent.network import DimensionMismatchError
from .config.loader import create_config_from_template
from .config.manager import ConfigurationError
from .harness.manifest import verify_manifest
from .tact.timetable import TimetableError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2
EXIT_CHECKPOINT = 3
EXIT_TAMPERED = 4


def _parse_overrides(items: Optional[List[str]]) -> Dict[str, str]:
    overrides = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ConfigurationError(f"Override must be section.key=value, got {item}", item)
        overrides[key.strip()] = value.strip()
    return overrides


def _split_list(text: str) -> List[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def _jsonable(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, list):
        return [_jsonable(v) for v in value]
    return value


def _emit(payload: Dict[str, Any]) -> None:
    print(json.dumps(_jsonable(payload), indent=2, sort_keys=True))


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file")
    common.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE",
                        help="Override one configuration value (repeatable)")
    common.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    common.add_argument("--output-dir", help="Parent directory of run directories")

    parser = argparse.ArgumentParser(
        prog="glassflow",
        description="FAB glass flow simulation, PPO training and dispatch baselines",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", parents=[common], help="Train a PPO policy")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--max-steps", type=int)
    p.add_argument("--resume", metavar="RUN_DIR", help="Continue a saved run")

    p = sub.add_parser("evaluate", parents=[common], help="Evaluate a policy")
    p.add_argument("--policy", choices=["checkpoint", "baseline", "random"],
                   default="checkpoint")
    p.add_argument("--checkpoint", help="Checkpoint file for --policy checkpoint")
    p.add_argument("--episodes", type=int)
    p.add_argument("--horizon", type=int)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("baseline-run", parents=[common],
                       help="Run the heuristic dispatcher and keep its traces")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steps", type=int)

    p = sub.add_parser("split-test", parents=[common], help="Sweep one parameter")
    p.add_argument("--param", required=True, help="key or section.key")
    p.add_argument("--values", required=True, help="Comma-separated values")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--seeds", help="Comma-separated seeds; defaults to --seed")
    p.add_argument("--jobs", type=int)
    p.add_argument("--max-steps", type=int)

    p = sub.add_parser("gantt", parents=[common], help="Timetable CSV and SVG from an event log")
    p.add_argument("event_log")
    p.add_argument("--tick", type=float, default=0.1, help="Seconds per tick")

    p = sub.add_parser("verify-manifest", help="Check artifact digests of a run")
    p.add_argument("run_dir")

    p = sub.add_parser("init-config", help="Write a configuration template")
    p.add_argument("--template", default="default",
                   choices=["default", "basic", "extension", "process_study"])
    p.add_argument("path")
    return parser


def _config(args: argparse.Namespace, seed: Optional[int] = None):
    config = core.load_run_config(args.config, _parse_overrides(args.set), seed)
    if args.log_level:
        core.set_log_level(args.log_level)
    return config


def _run(args: argparse.Namespace) -> int:
    if args.command == "init-config":
        create_config_from_template(args.template, args.path)
        _emit({"written": args.path, "template": args.template})
        return EXIT_OK

    if args.command == "verify-manifest":
        problems = verify_manifest(args.run_dir)
        _emit({"run_dir": args.run_dir, "problems": problems})
        return EXIT_TAMPERED if problems else EXIT_OK

    if args.command == "gantt":
        if args.log_level:
            core.set_log_level(args.log_level)
        paths = core.render_gantt(args.event_log, args.output_dir, args.tick)
        _emit({"timetable": str(paths[0]), "svg": str(paths[1])})
        return EXIT_OK

    if args.command == "train":
        config = _config(args, args.seed)
        run_dir, result = core.train(config, args.seed, args.output_dir,
                                     args.max_steps, args.resume)
        _emit({"run_dir": str(run_dir), "iterations": result.iterations,
               "env_steps": result.env_steps, "checkpoint": str(result.checkpoint)})
        return EXIT_OK

    if args.command == "evaluate":
        config = _config(args)
        report = core.evaluate(config, args.policy, args.checkpoint, args.episodes,
                               args.horizon, args.seed, args.output_dir)
        _emit(report.as_dict())
        return EXIT_OK

    if args.command == "baseline-run":
        config = _config(args)
        run_dir = core.baseline_run(config, args.seed, args.steps, args.output_dir)
        _emit({"run_dir": str(run_dir)})
        return EXIT_OK

    if args.command == "split-test":
        config = _config(args, args.seed)
        seeds = [int(s) for s in _split_list(args.seeds)] if args.seeds else [args.seed]
        run_dir, report = core.run_split_test(config, args.param, _split_list(args.values),
                                              seeds, args.jobs, args.max_steps,
                                              args.output_dir)
        _emit({"run_dir": str(run_dir), "parameter": report.parameter,
               "summary": report.summary()})
        return EXIT_OK

    raise ValueError(f"Unknown command {args.command}")


def main(argv: Optional[List[str]] = None) -> int:
    """
    Run the command line.

    Returns:
        0 on success, 2 for configuration errors, 3 for checkpoint problems,
        4 when a manifest check fails and 1 for anything else
    """
    args = build_parser().parse_args(argv)
    try:
        return _run(args)
    except ConfigurationError as e:
        field = f" [{e.field}]" if e.field else ""
        print(f"configuration error{field}: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (DimensionMismatchError, CheckpointError) as e:
        print(f"checkpoint error: {e}", file=sys.stderr)
        return EXIT_CHECKPOINT
    except (TimetableError, ValueError, LookupError, OSError, RuntimeError) as e:
        logger.debug(f"{args.command} failed", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
