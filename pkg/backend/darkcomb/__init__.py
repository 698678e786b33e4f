import argparse
import logging
from typing import Optional, Sequence

from .startup_checks import run_startup_checks

__version__ = "0.1.0"

logger = logging.getLogger(__name__)


def create_cli(testing: bool = False) -> argparse.ArgumentParser:
    """CLI factory: runs startup checks and registers every subcommand."""
    if not testing:
        run_startup_checks()

    parser = argparse.ArgumentParser(
        prog="darkcomb",
        description="Double-dark-resonance spectroscopy: spectra, sideband combs and dressed-state analysis.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    from .commands import common_parser
    from .commands import comb, dressed, eigenvalues, presets, spectrum

    common = common_parser()
    for module in (spectrum, comb, eigenvalues, dressed, presets):
        module.register(subparsers, common)
    return parser


def main(argv: Optional[Sequence[str]] = None, testing: bool = False) -> int:
    try:
        parser = create_cli(testing=testing)
    except RuntimeError as exc:
        logger.error("%s", exc)
        return 3
    args = parser.parse_args(argv)
    return args.handler(args)
