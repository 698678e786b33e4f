import argparse
from typing import List, Optional

import numpy as np

from .. import __version__
from ..repository.csv_repository import metadata_header, write_dressed_compare
from ..run_config import RunConfig
from ..services.dressed import compare_dressed
from . import executor, run_command


@executor("dressed-compare")
def compute(config: RunConfig, out_dir: str, threads: Optional[int]) -> List[str]:
    fields = config.field_set()
    ratios = np.geomspace(config.compare_min_ratio, config.compare_max_ratio, config.compare_points)
    comparison = compare_dressed(fields.omega_drive, fields.nu_rf, ratios)
    return [write_dressed_compare(out_dir, comparison, config, metadata_header(config, __version__))]


def register(subparsers: argparse._SubParsersAction, common: argparse.ArgumentParser) -> None:
    parser = subparsers.add_parser(
        "dressed-compare", parents=[common], help="first-order vs exact dressed states over omega_rf"
    )
    parser.set_defaults(handler=run_command("dressed-compare"))
