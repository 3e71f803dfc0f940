"""
Core interface functions for glassflow.

Provides the workflows the command line and notebooks use: loading a run
configuration, training, evaluation, baseline runs, split tests and Gantt
rendering.
"""

import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

from .agent.checkpoint import CheckpointError
from .agent.trainer import Trainer, TrainingResult
from .config.manager import ConfigManager
from .dispatch import registry
from .env.fab_env import FabEnv
from .harness.evaluation import EvaluationReport, evaluate as _evaluate, run_episode, write_report
from .harness.manifest import RunManifest, run_dir_name
from .harness.split_test import SplitTestReport, run_split_test as _run_split_test
from .logging.trace_logger import TraceLogger, read_event_log, write_event_log
from .tact.timetable import build_timetable, write_timetable_csv, write_timetable_svg

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

# Domain errors reach the caller unchanged
_PASSTHROUGH = (ValueError, LookupError, CheckpointError, FileNotFoundError)

POLICY_ALIASES = {"baseline": "heuristic"}


def load_run_config(config_file: Optional[PathLike] = None,
                    overrides: Optional[Dict[str, str]] = None,
                    seed: Optional[int] = None) -> ConfigManager:
    """
    Build the configuration of a run.

    Precedence: defaults < file < GLASSFLOW_* environment < overrides < seed.

    Args:
        config_file: JSON configuration file
        overrides: ``section.key`` -> value
        seed: Seed written into ``ppo.seed``

    Returns:
        Validated ConfigManager

    Raises:
        ConfigurationError: Naming the first invalid field
    """
    config = ConfigManager(str(config_file) if config_file is not None else None)
    for key, value in (overrides or {}).items():
        config.set_value(key, value)
    if seed is not None:
        config.ppo.seed = seed
    config.ensure_valid()
    set_log_level(config.run.log_level)
    return config


def new_run_dir(config: ConfigManager, seed: int,
                output_dir: Optional[PathLike] = None) -> Path:
    base = Path(output_dir if output_dir is not None else config.run.output_dir)
    run_dir = base / run_dir_name(seed)
    suffix = 1
    while run_dir.exists():
        run_dir = base / f"{run_dir_name(seed)}-{suffix}"
        suffix += 1
    run_dir.mkdir(parents=True)
    return run_dir


def train(config: ConfigManager, seed: int, output_dir: Optional[PathLike] = None,
          max_steps: Optional[int] = None,
          resume: Optional[PathLike] = None) -> Tuple[Path, TrainingResult]:
    """
    Train a policy and write checkpoint, metrics CSV and manifest.

    Args:
        config: Validated configuration
        seed: Root seed of the run
        output_dir: Parent of the run directory; defaults to ``run.output_dir``
        max_steps: Step budget; defaults to ``ppo.max_steps``
        resume: Existing run directory to continue instead of starting fresh

    Returns:
        (run directory, TrainingResult)

    Raises:
        ConfigurationError: If the configuration is invalid
        RuntimeError: If training fails
    """
    try:
        if resume is not None:
            run_dir = Path(resume)
            trainer = Trainer.resume(config, run_dir)
        else:
            run_dir = new_run_dir(config, seed, output_dir)
            trainer = Trainer(config, seed=seed, run_dir=run_dir)
        manifest = RunManifest.start("train", config, [seed])
        result = trainer.train(max_steps=max_steps)
        manifest.finish(run_dir)
        return run_dir, result
    except _PASSTHROUGH:
        raise
    except Exception as e:
        logger.error(f"Training failed: {e}")
        raise RuntimeError(f"Failed to train: {e}")


def evaluate(config: ConfigManager, policy: str = "checkpoint",
             checkpoint: Optional[PathLike] = None, episodes: Optional[int] = None,
             horizon: Optional[int] = None, seed: int = 0,
             output_dir: Optional[PathLike] = None) -> EvaluationReport:
    """
    Evaluate a checkpoint, the baseline or the random policy.

    Args:
        config: Validated configuration
        policy: ``checkpoint``, ``baseline`` (alias of ``heuristic``) or ``random``
        checkpoint: Checkpoint file for the checkpoint policy
        episodes: Evaluation episodes; defaults to ``run.eval_episodes``
        horizon: Macro-steps per episode; defaults to ``run.eval_horizon``
        seed: Root seed of the evaluation worlds
        output_dir: When given, the report, traces and manifest go into a run directory

    Returns:
        EvaluationReport

    Raises:
        DimensionMismatchError: If the checkpoint does not fit the configuration
        CheckpointError: If the checkpoint cannot be read
        RuntimeError: If evaluation fails otherwise
    """
    name = POLICY_ALIASES.get(policy, policy)
    if name == "checkpoint" and checkpoint is None:
        raise ValueError("Checkpoint policy needs a checkpoint path")
    policy_config = {"checkpoint": str(checkpoint)} if name == "checkpoint" else {"seed": seed}
    try:
        instance = registry.create_policy(name, policy_config)
        run_dir = new_run_dir(config, seed, output_dir) if output_dir is not None else None
        manifest = RunManifest.start(f"evaluate {name}", config, [seed])
        report = _evaluate(instance, config, episodes, horizon, seed,
                           trace_dir=run_dir / "traces" if run_dir else None)
        if run_dir is not None:
            write_report(report, run_dir / "evaluation.csv")
            manifest.finish(run_dir)
        return report
    except _PASSTHROUGH:
        raise
    except Exception as e:
        logger.error(f"Evaluation of {policy} failed: {e}")
        raise RuntimeError(f"Failed to evaluate: {e}")


def baseline_run(config: ConfigManager, seed: int, steps: Optional[int] = None,
                 output_dir: Optional[PathLike] = None) -> Path:
    """
    Drive one world with the heuristic dispatcher and keep its traces.

    Writes ``trace.csv`` (one row per decision), ``events.csv`` and a manifest.

    Returns:
        Run directory
    """
    steps = config.run.eval_horizon if steps is None else steps
    try:
        run_dir = new_run_dir(config, seed, output_dir)
        manifest = RunManifest.start("baseline-run", config, [seed])
        env = FabEnv(config, seed=seed, trace=TraceLogger(run_dir / "trace.csv"))
        with registry.create_policy("heuristic") as policy:
            stats = run_episode(env, policy, steps)
        write_event_log(env.world.event_log, run_dir / "events.csv")
        manifest.finish(run_dir)
        logger.info(f"Baseline run: {stats.processed} processed, "
                    f"{stats.dropped + stats.broken + stats.incomplete} failed in {steps} steps")
        return run_dir
    except _PASSTHROUGH:
        raise
    except Exception as e:
        logger.error(f"Baseline run failed: {e}")
        raise RuntimeError(f"Failed to run baseline: {e}")


def run_split_test(config: ConfigManager, parameter: str, values: Sequence[str],
                   seeds: Sequence[int], jobs: Optional[int] = None,
                   max_steps: Optional[int] = None,
                   output_dir: Optional[PathLike] = None) -> Tuple[Path, SplitTestReport]:
    """
    Sweep one parameter and write ``split_test.csv`` plus a manifest.

    Returns:
        (run directory, SplitTestReport)

    Raises:
        ConfigurationError: If the parameter is unknown or a value does not fit
    """
    jobs = config.run.jobs if jobs is None else jobs
    try:
        run_dir = new_run_dir(config, seeds[0], output_dir)
        manifest = RunManifest.start(f"split-test {parameter}", config, list(seeds))
        report = _run_split_test(config, parameter, values, seeds, jobs=jobs,
                                 max_steps=max_steps, output_dir=run_dir / "cells")
        report.write_csv(run_dir / "split_test.csv")
        manifest.finish(run_dir)
        return run_dir, report
    except _PASSTHROUGH:
        raise
    except Exception as e:
        logger.error(f"Split test on {parameter} failed: {e}")
        raise RuntimeError(f"Failed to run split test: {e}")


def render_gantt(event_log: PathLike, output_dir: Optional[PathLike] = None,
                 tick_duration_s: float = 0.1) -> List[Path]:
    """
    Turn an event log CSV into a timetable CSV and an SVG chart.

    Args:
        event_log: Event log written by a run
        output_dir: Destination; defaults to the log's directory
        tick_duration_s: Seconds per tick

    Returns:
        [timetable CSV, SVG]

    Raises:
        TimetableError: If the log is out of order
    """
    event_log = Path(event_log)
    out = Path(output_dir) if output_dir is not None else event_log.parent
    try:
        timetable = build_timetable(read_event_log(event_log), tick_duration_s)
        stem = event_log.stem
        return [write_timetable_csv(timetable, out / f"{stem}_timetable.csv"),
                write_timetable_svg(timetable, out / f"{stem}_timetable.svg", title=stem)]
    except _PASSTHROUGH:
        raise
    except Exception as e:
        logger.error(f"Gantt rendering failed for {event_log}: {e}")
        raise RuntimeError(f"Failed to render timetable: {e}")


def set_log_level(level: str) -> None:
    logging.getLogger("glassflow").setLevel(level.upper())


# Configure logging
def _configure_logging() -> None:
    """Configure logging for the package."""
    package_logger = logging.getLogger("glassflow")
    package_logger.setLevel(logging.INFO)
    if not package_logger.handlers:
        handler = logging.StreamHandler()
        formatter = logging.Formatter(
            '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
        )
        handler.setFormatter(formatter)
        package_logger.addHandler(handler)


_configure_logging()
