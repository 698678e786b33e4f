import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, List

import numpy as np
from scipy.signal import find_peaks, peak_widths

if TYPE_CHECKING:
    from .spectroscopy import Spectrum

logger = logging.getLogger(__name__)

ABSORPTION = "absorption"
TRANSMISSION = "transmission"


class LineMetricsError(ValueError):
    """A line touches the scan boundary or is narrower than two grid steps."""


@dataclass(frozen=True)
class Line:
    position: float
    fwhm: float
    depth: float
    kind: str
    at_boundary: bool = False
    resolved: bool = True


def _refine_peak(signal: np.ndarray, p: int) -> float:
    """Fractional index of the vertex of the parabola through the peak and its neighbours."""
    if p <= 0 or p >= signal.size - 1:
        return float(p)
    y0, y1, y2 = signal[p - 1], signal[p], signal[p + 1]
    curvature = y0 - 2.0 * y1 + y2
    if curvature == 0:
        return float(p)
    return p + float(np.clip(0.5 * (y0 - y2) / curvature, -0.5, 0.5))


def find_lines(
    detuning: np.ndarray,
    values: np.ndarray,
    kind: str = ABSORPTION,
    rel_prominence: float = 0.02,
    strict: bool = False,
) -> List[Line]:
    """Locate absorption minima or transmission maxima and measure them.

    Widths are taken at half prominence, interpolated on the (possibly
    non-uniform) detuning axis.
    """
    x = np.asarray(detuning, dtype=float)
    y = np.asarray(values, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("detuning and values must be 1-D arrays of equal length")
    if x.size < 3:
        raise ValueError("need at least three points to find lines")
    if kind not in (ABSORPTION, TRANSMISSION):
        raise ValueError(f"unknown line kind '{kind}'")

    signal = y if kind == TRANSMISSION else -y
    span = float(np.ptp(signal))
    if span == 0:
        return []

    peaks, props = find_peaks(signal, prominence=rel_prominence * span)
    if peaks.size == 0:
        return []
    _, _, left_ips, right_ips = peak_widths(
        signal, peaks, rel_height=0.5,
        prominence_data=(props["prominences"], props["left_bases"], props["right_bases"]),
    )

    index = np.arange(x.size)
    last = x.size - 1
    lines: List[Line] = []
    for i, p in enumerate(peaks):
        position = float(np.interp(_refine_peak(signal, p), index, x))
        fwhm = float(np.interp(right_ips[i], index, x) - np.interp(left_ips[i], index, x))
        lo, hi = max(p - 1, 0), min(p + 1, last)
        local_step = float((x[hi] - x[lo]) / (hi - lo))
        at_boundary = bool(left_ips[i] <= 0 or right_ips[i] >= last)
        resolved = fwhm >= 2.0 * local_step

        if at_boundary or not resolved:
            problem = "touches the scan boundary" if at_boundary else "is narrower than two grid steps"
            if strict:
                raise LineMetricsError(f"{kind} line at {position:.6g} {problem}")
            logger.warning("%s line at %.6g %s", kind.capitalize(), position, problem)

        lines.append(Line(
            position=position,
            fwhm=fwhm,
            depth=float(props["prominences"][i]),
            kind=kind,
            at_boundary=at_boundary,
            resolved=resolved,
        ))
    return lines


def line_metrics(spectrum: "Spectrum", strict: bool = False, rel_prominence: float = 0.02) -> List[Line]:
    """Lines of a transmission spectrum: transmission peaks when Doppler averaged, absorption dips otherwise."""
    kind = TRANSMISSION if spectrum.doppler_averaged else ABSORPTION
    return find_lines(spectrum.detuning, spectrum.transmission, kind, rel_prominence, strict)
