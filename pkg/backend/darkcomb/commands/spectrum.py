import argparse
from typing import List, Optional

from .. import __version__
from ..repository.csv_repository import metadata_header, write_metrics, write_spectrum
from ..run_config import RunConfig
from ..services.lines import line_metrics
from ..services.spectroscopy import transmission_spectrum
from . import executor, run_command


@executor("spectrum")
def compute(config: RunConfig, out_dir: str, threads: Optional[int]) -> List[str]:
    spectrum = transmission_spectrum(
        config.atom_system(),
        config.field_set(),
        config.medium(),
        config.detuning_grid(),
        doppler=config.doppler(),
        settings=config.solver_settings(threads),
        propagation=config.propagation,
        check_linearity=config.check_linearity,
    )
    lines = line_metrics(spectrum, strict=True) if config.strict_lines else spectrum.lines
    metadata = metadata_header(config, __version__)
    return [
        write_spectrum(out_dir, spectrum, config, metadata),
        write_metrics(out_dir, lines, config, metadata),
    ]


def register(subparsers: argparse._SubParsersAction, common: argparse.ArgumentParser) -> None:
    parser = subparsers.add_parser(
        "spectrum", parents=[common], help="probe transmission spectrum and line metrics"
    )
    parser.set_defaults(handler=run_command("spectrum"))
