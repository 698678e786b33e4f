import argparse
from typing import List, Optional

from .. import __version__
from ..repository.csv_repository import metadata_header, write_analyzer, write_comb
from ..run_config import RunConfig
from ..services.spectroscopy import sideband_comb
from . import executor, run_command


@executor("comb")
def compute(config: RunConfig, out_dir: str, threads: Optional[int]) -> List[str]:
    spectrum = sideband_comb(
        config.atom_system(),
        config.field_set(),
        config.medium(),
        config.detuning_grid(),
        sidebands=config.sidebands,
        doppler=config.doppler(),
        settings=config.solver_settings(threads),
        propagation=config.propagation,
        check_linearity=config.check_linearity,
    )
    metadata = metadata_header(config, __version__)
    written = [write_comb(out_dir, spectrum, config, metadata)]
    if config.analyzer_bandwidth > 0:
        written.append(write_analyzer(out_dir, spectrum, config, metadata))
    return written


def register(subparsers: argparse._SubParsersAction, common: argparse.ArgumentParser) -> None:
    parser = subparsers.add_parser(
        "comb", parents=[common], help="output intensities of the probe sideband comb"
    )
    parser.set_defaults(handler=run_command("comb"))
