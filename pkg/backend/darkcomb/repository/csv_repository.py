import csv
import logging
import os
from typing import Iterable, List, Sequence

import numpy as np

from ..run_config import RunConfig
from ..services.dressed import LABELS, DressedComparison, EigenScan
from ..services.lines import Line
from ..services.spectroscopy import Spectrum, analyzer_trace

logger = logging.getLogger(__name__)

SIGNIFICANT_DIGITS = 9
ANALYZER_POINTS_PER_BANDWIDTH = 10


def _format(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.{SIGNIFICANT_DIGITS}g}"


def metadata_header(config: RunConfig, version: str) -> List[str]:
    """Comment block naming the software version and every resolved parameter."""
    return [f"darkcomb {version}"] + config.to_lines()


def write_table(
    path: str, columns: Sequence[str], rows: Iterable[Sequence], metadata: Sequence[str] = ()
) -> str:
    """Write a comma-separated table with a `#` metadata block and LF line endings."""
    try:
        os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="") as handle:
            for line in metadata:
                handle.write(f"# {line}\n")
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(columns)
            count = 0
            for row in rows:
                writer.writerow([_format(v) for v in row])
                count += 1
    except OSError as exc:
        raise RuntimeError(f"Failed to write {path}: {exc}") from exc
    logger.info("Wrote %s (%d rows)", path, count)
    return path


def write_spectrum(out_dir: str, spectrum: Spectrum, config: RunConfig, metadata: Sequence[str]) -> str:
    hz = config.gamma_rad
    rows = zip(spectrum.detuning * hz, spectrum.transmission)
    return write_table(os.path.join(out_dir, "spectrum.csv"), ("delta_hz", "transmission"), rows, metadata)


def write_metrics(out_dir: str, lines: Sequence[Line], config: RunConfig, metadata: Sequence[str]) -> str:
    hz = config.gamma_rad
    rows = (
        (line.position * hz, line.fwhm * hz, line.depth, line.kind, line.at_boundary, line.resolved)
        for line in lines
    )
    columns = ("position_hz", "fwhm_hz", "depth", "kind", "at_boundary", "resolved")
    return write_table(os.path.join(out_dir, "metrics.csv"), columns, rows, metadata)


def write_comb(out_dir: str, spectrum: Spectrum, config: RunConfig, metadata: Sequence[str]) -> str:
    hz = config.gamma_rad
    columns = ["delta_hz"] + [f"intensity_{n}" for n in spectrum.orders] + ["total"]
    totals = spectrum.intensities.sum(axis=1)
    rows = (
        [d] + list(intensities) + [total]
        for d, intensities, total in zip(spectrum.detuning * hz, spectrum.intensities, totals)
    )
    comment = list(metadata) + [f"passive = {'true' if spectrum.passive else 'false'}"]
    return write_table(os.path.join(out_dir, "comb.csv"), columns, rows, comment)


def write_analyzer(out_dir: str, spectrum: Spectrum, config: RunConfig, metadata: Sequence[str]) -> str:
    """Analyzer view of the comb at the grid points nearest 0 and +/-nu_rf."""
    hz = config.gamma_rad
    bandwidth = config.internal(config.analyzer_bandwidth)
    reach = (spectrum.sidebands + 1) * spectrum.nu_rf
    points = int(np.ceil(2.0 * reach / bandwidth * ANALYZER_POINTS_PER_BANDWIDTH)) + 1
    offsets = np.linspace(-reach, reach, points)

    centres = sorted({float(c) for c in (0.0, spectrum.nu_rf, -spectrum.nu_rf)})
    indices = sorted({int(np.argmin(np.abs(spectrum.detuning - c))) for c in centres})
    rows = []
    for index in indices:
        power = analyzer_trace(spectrum, bandwidth, offsets, index)
        rows.extend((f * hz, spectrum.detuning[index] * hz, p) for f, p in zip(offsets, power))
    return write_table(os.path.join(out_dir, "analyzer.csv"), ("offset_hz", "delta_hz", "power"), rows, metadata)


def write_eigencurves(out_dir: str, scan: EigenScan, config: RunConfig, metadata: Sequence[str]) -> List[str]:
    hz = config.gamma_rad
    columns = (
        ["doppler_hz"]
        + [f"lambda_{i}_hz" for i in range(1, 5)]
        + ["bare_a_hz", "bare_c_hz", "bare_d1_hz", "bare_d2_hz", "stark_plus_hz", "stark_minus_hz", "min_overlap"]
    )
    rows = (
        [d] + list(curve) + list(bare) + list(stark) + [overlap]
        for d, curve, bare, stark, overlap in zip(
            scan.doppler_grid * hz, scan.curves * hz, scan.bare * hz, scan.stark * hz, scan.min_overlap
        )
    )
    curves_path = write_table(os.path.join(out_dir, "eigencurves.csv"), columns, rows, metadata)
    gap_rows = ((target, gap * hz) for target, gap in scan.gaps.items())
    gaps_path = write_table(os.path.join(out_dir, "gaps.csv"), ("target", "min_gap_hz"), gap_rows, metadata)
    return [curves_path, gaps_path]


def write_dressed_compare(
    out_dir: str, comparison: DressedComparison, config: RunConfig, metadata: Sequence[str]
) -> str:
    hz = config.gamma_rad
    errors = comparison.errors
    rows = []
    for i, ratio in enumerate(comparison.ratios):
        for j, label in enumerate(LABELS):
            rows.append((
                ratio, label, comparison.exact[i, j] * hz, comparison.perturbative[i, j] * hz,
                errors[i, j] * hz, comparison.overlaps[i, j],
            ))
    slopes = [f"slope[{label}] = {_format(slope)}" for label, slope in comparison.slopes.items()]
    columns = ("omega_rf_ratio", "state", "exact_hz", "perturbative_hz", "error_hz", "overlap")
    return write_table(os.path.join(out_dir, "dressed_compare.csv"), columns, rows, list(metadata) + slopes)
