import argparse
from typing import List, Optional

from .. import __version__
from ..repository.csv_repository import metadata_header, write_eigencurves
from ..run_config import RunConfig
from ..services.dressed import eigenvalue_scan
from . import executor, run_command


@executor("eigenvalues")
def compute(config: RunConfig, out_dir: str, threads: Optional[int]) -> List[str]:
    fields = config.field_set()
    scan = eigenvalue_scan(fields.omega_drive, fields.omega_rf, fields.nu_rf, config.doppler_grid())
    return write_eigencurves(out_dir, scan, config, metadata_header(config, __version__))


def register(subparsers: argparse._SubParsersAction, common: argparse.ArgumentParser) -> None:
    parser = subparsers.add_parser(
        "eigenvalues", parents=[common], help="dressed eigenvalues versus Doppler shift"
    )
    parser.set_defaults(handler=run_command("eigenvalues"))
