import argparse

from ..presets import list_presets
from ..run_config import load_run_config
from . import EXIT_OK, execute, guarded


@guarded
def run_preset(args: argparse.Namespace) -> int:
    config = load_run_config(args.config, preset=args.name, overrides={"grid_points": args.grid_points})
    return execute(config, args)


def show_presets(args: argparse.Namespace) -> int:
    print(list_presets())
    return EXIT_OK


def register(subparsers: argparse._SubParsersAction, common: argparse.ArgumentParser) -> None:
    parser = subparsers.add_parser("preset", parents=[common], help="run a named preset scenario")
    parser.add_argument("name", help="preset name (see list-presets)")
    parser.set_defaults(handler=run_preset)

    listing = subparsers.add_parser("list-presets", help="list the available presets")
    listing.set_defaults(handler=show_presets)
