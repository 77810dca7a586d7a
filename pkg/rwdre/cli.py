"""
rwdre command line: estimate, sweep, verify and replay

Exit codes: 0 success, 1 verification failure or replay mismatch,
2 usage or configuration error.
"""

__all__ = [
    "EXIT_CONFIG",
    "EXIT_FAILURE",
    "EXIT_OK",
    "build_config",
    "build_parser",
    "cmd_estimate",
    "cmd_replay",
    "cmd_sweep",
    "cmd_verify",
    "epsilon_grid",
    "execute",
    "main",
]

import argparse
import logging
import numpy as np
import os
from pathlib import Path
from sqlalchemy.exc import SQLAlchemyError
import sys
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from . import __version__
from .db import Database, load_dotenv_config, resolve_database_url
from .environments import EnvironmentKind, evolve_discrete, sample_stationary
from .errors import ConfigError
from .estimators import estimate_speed, exact_speed, oracle_admits, speed_sweep
from .manifest import (
    RunManifest,
    load_json,
    now,
    write_json,
    write_sweep_csv,
    write_trajectory_csv,
)
from .randomness import RandomSource
from .settings import (
    DEFAULT_DENSITY,
    DEFAULT_EPSILON,
    DEFAULT_GRID,
    DEFAULT_HORIZON,
    DEFAULT_KIND,
    DEFAULT_RING,
    DEFAULT_SEED,
    DEFAULT_SUBSTEPS,
    DEFAULT_TRIALS,
    MIN_REPORT_TRIALS,
)
from .verify import SUITES, run_suite
from .walkers import SimConfig, TimeMode, run_continuous, run_discrete

logger = logging.getLogger(__name__)

EXIT_OK: int = 0
EXIT_FAILURE: int = 1
EXIT_CONFIG: int = 2

KIND_ALIASES: Dict[str, str] = {
    "frozen": EnvironmentKind.FROZEN_BERNOULLI.value,
    "iid": EnvironmentKind.IID_REFRESH.value,
    "ssep": EnvironmentKind.SSEP_RANDOM_SCAN.value,
    "east": EnvironmentKind.EAST_RANDOM_SCAN.value,
    "west": EnvironmentKind.WEST_RANDOM_SCAN.value,
    "tasep": EnvironmentKind.TASEP_RANDOM_SCAN.value,
}


def _number(text: str) -> Union[int, float]:
    value = float(text)
    return int(value) if value.is_integer() and "." not in text else value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rwdre",
        description="Random walks in dynamic reversible random environments",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument(
        "--log-level", default="INFO", help="logging level (default: INFO)"
    )
    commands = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="64-bit master seed")
    common.add_argument(
        "--out", type=Path, default=Path("rwdre-out"), help="output directory"
    )
    common.add_argument(
        "--workers",
        type=int,
        default=os.cpu_count() or 1,
        help="worker processes (default: machine parallelism)",
    )
    common.add_argument("--db", default=None, help="run-history database url")
    common.add_argument(
        "--no-db", action="store_true", help="do not record the run in a database"
    )

    experiment = argparse.ArgumentParser(add_help=False)
    experiment.add_argument("--config", type=Path, help="JSON experiment config")
    experiment.add_argument(
        "--env", help=f"environment kind: {', '.join(KIND_ALIASES)} or full name"
    )
    experiment.add_argument("--L", type=int, help="ring size")
    experiment.add_argument("--p", type=float, help="density")
    experiment.add_argument("--substeps", type=int, help="sub-updates per step")
    experiment.add_argument("--eps", type=float, help="the walk's bias")
    experiment.add_argument("--N", type=_number, help="horizon, steps or time")
    experiment.add_argument("--M", type=int, help="number of trials")
    experiment.add_argument(
        "--mode", choices=[m.value for m in TimeMode], help="time mode"
    )

    estimate = commands.add_parser(
        "estimate", parents=[common, experiment], help="estimate the speed"
    )
    estimate.add_argument(
        "--dump", type=int, default=0, metavar="K", help="write K trajectories"
    )
    estimate.set_defaults(handler=cmd_estimate)

    sweep = commands.add_parser(
        "sweep", parents=[common, experiment], help="speed over an epsilon grid"
    )
    sweep.add_argument(
        "--grid",
        type=float,
        nargs=3,
        default=list(DEFAULT_GRID),
        metavar=("START", "STOP", "STEP"),
        help="epsilon grid, STOP included",
    )
    sweep.set_defaults(handler=cmd_sweep)

    verify = commands.add_parser(
        "verify", parents=[common], help="run an acceptance suite"
    )
    verify.add_argument("suite", choices=list(SUITES) + ["all"])
    verify.set_defaults(handler=cmd_verify)

    replay = commands.add_parser(
        "replay", parents=[common], help="re-run a manifest and compare results"
    )
    replay.add_argument("manifest", type=Path)
    replay.set_defaults(handler=cmd_replay)
    return parser


def build_config(args: argparse.Namespace) -> SimConfig:
    """
    Defaults, overridden by the --config file, overridden by explicit flags
    """
    data: Dict[str, Any] = {
        "epsilon": DEFAULT_EPSILON,
        "env": {
            "kind": DEFAULT_KIND,
            "L": DEFAULT_RING,
            "p": DEFAULT_DENSITY,
            "substeps_k": DEFAULT_SUBSTEPS,
        },
        "N": DEFAULT_HORIZON,
        "trials": DEFAULT_TRIALS,
        "seed": DEFAULT_SEED,
        "time_mode": TimeMode.DISCRETE.value,
    }
    if args.config is not None:
        try:
            given = load_json(args.config)
        except (OSError, ValueError) as e:
            raise ConfigError("config", f"cannot read {args.config}: {e}")
        data["env"].update(given.pop("env", {}))
        data.update(given)

    flags = {
        "epsilon": args.eps,
        "N": args.N,
        "trials": args.M,
        "seed": args.seed,
        "time_mode": args.mode,
    }
    data.update({k: v for k, v in flags.items() if v is not None})
    env_flags = {
        "kind": KIND_ALIASES.get(args.env, args.env),
        "L": args.L,
        "p": args.p,
        "substeps_k": args.substeps,
    }
    data["env"].update({k: v for k, v in env_flags.items() if v is not None})
    return SimConfig.from_dict(data).validate()


def epsilon_grid(start: float, stop: float, step: float) -> List[float]:
    """start, start + step, ... up to stop inclusive, rounded to 10 digits"""
    if step <= 0:
        raise ConfigError("grid", f"step must be positive, got {step}")
    grid = np.round(np.arange(start, stop + step / 2, step), 10)
    for epsilon in grid:
        if not -0.5 <= epsilon <= 0.5:
            raise ConfigError(
                "grid",
                f"{epsilon:g} is outside [-1/2, 1/2]",
                "the jump probabilities 1/2 + epsilon and 1/2 - epsilon must lie "
                "in [0, 1]",
            )
    return [float(epsilon) + 0.0 for epsilon in grid]


def _require_report_trials(config: SimConfig) -> None:
    if config.trials < MIN_REPORT_TRIALS:
        raise ConfigError(
            "trials",
            f"reports need at least {MIN_REPORT_TRIALS} trials, got {config.trials}",
            "the intervals use a normal approximation",
        )


def execute(
    command: str,
    config: Optional[SimConfig],
    arguments: Dict[str, Any],
    seed: int,
    workers: int = 1,
) -> Dict[str, Any]:
    """
    The result payload of a command; a pure function of its inputs
    """
    if command == "estimate":
        estimate = estimate_speed(config, workers)
        exact = None
        if config.is_discrete and oracle_admits(config.env):
            exact = exact_speed(config.env, config.epsilon).exact_speed
        return {"estimate": estimate.to_dict(), "exact_speed": exact}
    if command == "sweep":
        rows = speed_sweep(config, arguments["grid"], workers)
        return {"rows": [row.to_dict() for row in rows]}
    if command == "verify":
        return run_suite(arguments["suite"], seed, workers).to_dict()
    raise ValueError(f"unknown command {command!r}")


def _record(args: argparse.Namespace, manifest: RunManifest) -> None:
    if args.no_db:
        return
    default = Database.sqlite_url(Path(args.out) / "runs.sqlite")
    url = args.db or resolve_database_url(load_dotenv_config(), default)
    db = Database()
    try:
        db.connect(url)
        db.create_all_tables()
        db.open_session()
        db.record(manifest)
    except SQLAlchemyError as e:
        logger.warning("run not recorded in %s: %s", url, e)
    finally:
        if db.engine is not None:
            db.disconnect()


def _run(
    args: argparse.Namespace,
    command: str,
    config: Optional[SimConfig],
    arguments: Dict[str, Any],
) -> Tuple[RunManifest, Path]:
    seed = config.seed if config is not None else args.seed
    started = now()
    result = execute(command, config, arguments, seed, args.workers)
    manifest = RunManifest(
        command=command,
        config=config.to_dict() if config is not None else {},
        seed=seed,
        code_version=__version__,
        started=started,
        finished=now(),
        result=result,
        arguments=arguments,
    )
    out = Path(args.out)
    path = manifest.save(out / f"{command}-manifest.json")
    _record(args, manifest)
    logger.info("manifest written to %s", path)
    return manifest, out


def _dump_trajectories(config: SimConfig, count: int, out: Path) -> Path:
    count = min(count, config.trials)
    src = RandomSource(config.seed)
    if config.is_discrete:
        batch = src.for_trials(np.arange(count))
        init = sample_stationary(config.env, batch)
        field = evolve_discrete(config.env, batch, config.steps, init)
        trajectory = run_discrete(field, batch, 0, config.steps, config.epsilon)
        return write_trajectory_csv(out / "trajectories.csv", trajectory.positions)
    horizon = float(config.N)
    runs = [
        run_continuous(config.env, src.for_trial(t), 0, horizon, config.epsilon)
        for t in range(count)
    ]
    return write_trajectory_csv(
        out / "trajectories.csv",
        [run.trajectory.positions for run in runs],
        [run.trajectory.jump_times for run in runs],
    )


def cmd_estimate(args: argparse.Namespace) -> int:
    config = build_config(args)
    _require_report_trials(config)
    manifest, out = _run(args, "estimate", config, {})
    report = {"config": manifest.config, **manifest.result}
    write_json(out / "estimate.json", report)
    write_sweep_csv(
        out / "estimate.csv",
        [
            {
                "epsilon": config.epsilon,
                "mean": manifest.result["estimate"]["mean"],
                "se": manifest.result["estimate"]["std_error"],
                "ci_low": manifest.result["estimate"]["ci_low"],
                "ci_high": manifest.result["estimate"]["ci_high"],
                "exact_speed": manifest.result["exact_speed"],
            }
        ],
    )
    if args.dump > 0:
        _dump_trajectories(config, args.dump, out)
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    config = build_config(args)
    _require_report_trials(config)
    grid = epsilon_grid(*args.grid)
    manifest, out = _run(args, "sweep", config, {"grid": grid})
    write_json(out / "sweep.json", {"config": manifest.config, **manifest.result})
    write_sweep_csv(out / "sweep.csv", manifest.result["rows"])
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    if args.seed is None:
        args.seed = DEFAULT_SEED
    manifest, out = _run(args, "verify", None, {"suite": args.suite})
    write_json(out / f"verify-{args.suite}.json", manifest.result)
    if manifest.result["passed"]:
        logger.info("verify %s passed", args.suite)
        return EXIT_OK
    logger.error(
        "verify %s failed %d of %d cases",
        args.suite,
        manifest.result["failures"],
        len(manifest.result["cases"]),
    )
    return EXIT_FAILURE


def cmd_replay(args: argparse.Namespace) -> int:
    try:
        recorded = RunManifest.load(args.manifest)
    except (OSError, ValueError, KeyError) as e:
        raise ConfigError("manifest", f"cannot read {args.manifest}: {e}")
    config = SimConfig.from_dict(recorded.config) if recorded.config else None
    result = execute(
        recorded.command, config, recorded.arguments, recorded.seed, args.workers
    )
    replayed = RunManifest(
        command=recorded.command,
        config=recorded.config,
        seed=recorded.seed,
        code_version=__version__,
        started=recorded.started,
        finished=recorded.finished,
        result=result,
        arguments=recorded.arguments,
    ).to_dict()["result"]
    if replayed == recorded.result:
        logger.info("replay of %s reproduced the result", args.manifest)
        return EXIT_OK
    differing = sorted(
        key
        for key in set(replayed) | set(recorded.result)
        if replayed.get(key) != recorded.result.get(key)
    )
    logger.error("replay differs in %s", ", ".join(differing))
    return EXIT_FAILURE


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig()
    logging.getLogger().setLevel(args.log_level.upper())
    logging.getLogger("sqlalchemy.engine").setLevel(logging.ERROR)
    try:
        return args.handler(args)
    except ConfigError as e:
        logger.error("invalid configuration: %s", e)
        print(f"rwdre: error: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
