"""
CLI subcommands. Each module registers its parser and returns a process exit code:
0 on success, 2 for configuration or model errors, 3 when a solver fails.
"""
import argparse
import functools
import logging
from typing import Callable, Dict, List, Optional

from ..config import Config
from ..run_config import ConfigError, RunConfig, load_run_config
from ..services.block_tridiagonal import SingularSystemError
from ..services.doppler import QuadratureError
from ..services.dressed import GuardBandError
from ..services.floquet import ConvergenceError, NotSettledError
from ..services.lines import LineMetricsError
from ..services.model import ModelError
from ..services.spectroscopy import LinearityError
from ..startup_checks import check_output_dir

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3

CONFIG_ERRORS = (ConfigError, ModelError, GuardBandError)
SOLVER_ERRORS = (
    SingularSystemError,
    ConvergenceError,
    NotSettledError,
    QuadratureError,
    LinearityError,
    LineMetricsError,
)

# command name -> function(config, out_dir, threads) returning written paths
Executor = Callable[[RunConfig, str, Optional[int]], List[str]]
EXECUTORS: Dict[str, Executor] = {}


def executor(name: str) -> Callable[[Executor], Executor]:
    def decorator(func: Executor) -> Executor:
        EXECUTORS[name] = func
        return func
    return decorator


def common_parser() -> argparse.ArgumentParser:
    """Options shared by every computing subcommand."""
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--config", metavar="FILE", help="run configuration file (key = value unit)")
    parser.add_argument("--out", metavar="DIR", help="output directory (default: output_dir key or DARKCOMB_OUTPUT_DIR)")
    parser.add_argument("--threads", type=int, metavar="N", help="worker threads for grid and quadrature maps")
    parser.add_argument("--grid-points", type=int, metavar="N", help="override grid_points")
    return parser


def output_dir(config: RunConfig, args: argparse.Namespace) -> str:
    out = args.out or config.output_dir or Config.OUTPUT_DIR
    if not check_output_dir(out):
        raise ConfigError(f"output directory '{out}' cannot be created or written", key="output_dir")
    return out


def guarded(func: Callable[[argparse.Namespace], int]) -> Callable[[argparse.Namespace], int]:
    """Map domain exceptions raised by a command to exit codes."""

    @functools.wraps(func)
    def wrapper(args: argparse.Namespace) -> int:
        try:
            return func(args)
        except CONFIG_ERRORS as exc:
            logger.error("Configuration error: %s", exc)
            return EXIT_CONFIG
        except SOLVER_ERRORS as exc:
            logger.error("Solver failed: %s", exc)
            return EXIT_SOLVER

    return wrapper


def run_scenario(config: RunConfig, out_dir: str, threads: Optional[int] = None) -> List[str]:
    """Run the computation named by config.command and return the written file paths."""
    from . import comb, dressed, eigenvalues, spectrum  # noqa: F401 (registers executors)

    if config.command not in EXECUTORS:
        raise ConfigError(f"unknown command '{config.command}'", key="command")
    return EXECUTORS[config.command](config, out_dir, threads)


def execute(config: RunConfig, args: argparse.Namespace) -> int:
    threads = args.threads if args.threads is not None else Config.THREADS
    if threads < 1:
        raise ConfigError("--threads must be at least 1", key="threads")
    out = output_dir(config, args)
    logger.info("Running %s into %s with %d threads", config.command, out, threads)
    written = run_scenario(config, out, threads)
    for path in written:
        print(path)
    logger.info("Finished %s: %d files", config.command, len(written))
    return EXIT_OK


def run_command(command: str) -> Callable[[argparse.Namespace], int]:
    """Handler for a subcommand that computes `command` from --config and overrides."""

    @guarded
    def handler(args: argparse.Namespace) -> int:
        overrides = {"command": command, "grid_points": args.grid_points}
        config = load_run_config(args.config, overrides=overrides)
        return execute(config, args)

    return handler
