"""
Probe susceptibility, transmission spectra and sideband-comb propagation.

The probe coherence rho_ab^(k) of the periodic steady state oscillates at
the probe frequency plus k*nu_rf. Per unit probe amplitude it gives the
response coefficients c_k(delta) = -(gamma_rad/2) rho_ab^(k) / alpha,
normalized so a bare two-level resonance has Im c_0 = 1. An input
sideband m is a probe shifted by m*nu_rf, so the harmonic transfer matrix
is chi_nm(delta) = c_{n-m}(delta - m*nu_rf).
"""
import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy.linalg import expm

from ..config import Config
from .doppler import DopplerDistribution, gauss_average
from .floquet import HarmonicState, SingularSystemError, floquet_steady_state, floquet_steady_state_auto
from .lines import ABSORPTION, TRANSMISSION, Line, find_lines
from .model import AtomSystem, FieldSet, LiouvillianHarmonics, ModelError, liouvillian_stack
from .parallel import map_chunks

logger = logging.getLogger(__name__)

PASSIVITY_SLACK = 1e-6
AVERAGED = "averaged"
PER_VELOCITY = "per_velocity"
PROPAGATION_MODES = (AVERAGED, PER_VELOCITY)

# Resonant two-level cross section 3*lambda^2/(2*pi) at 795 nm
RB_D1_WAVELENGTH_CM = 795e-7
DEFAULT_CROSS_SECTION_CM2 = 3.0 * RB_D1_WAVELENGTH_CM ** 2 / (2.0 * math.pi)


class LinearityError(RuntimeError):
    """Halving the probe changed the susceptibility by more than the allowed tolerance."""


@dataclass(frozen=True)
class MediumSpec:
    """Vapor cell; only the optical depth reaches the observables."""

    length_cm: float = 4.0
    density_cm3: float = 0.0
    cross_section_cm2: float = DEFAULT_CROSS_SECTION_CM2
    strength: float = 1.0
    optical_depth_override: Optional[float] = None

    def __post_init__(self) -> None:
        if self.optical_depth < 0:
            raise ModelError(f"optical depth must be non-negative, got {self.optical_depth}")

    @classmethod
    def from_optical_depth(cls, optical_depth: float) -> "MediumSpec":
        return cls(optical_depth_override=float(optical_depth))

    @property
    def absorption_coefficient(self) -> float:
        """Resonant intensity absorption coefficient per cm."""
        if self.optical_depth_override is not None:
            return self.optical_depth_override / self.length_cm
        return self.density_cm3 * self.cross_section_cm2 * self.strength

    @property
    def optical_depth(self) -> float:
        if self.optical_depth_override is not None:
            return self.optical_depth_override
        return self.density_cm3 * self.cross_section_cm2 * self.strength * self.length_cm


@dataclass(frozen=True)
class SolverSettings:
    """Truncation and batching of the steady-state solves. truncation=None selects N adaptively."""

    truncation: Optional[int] = None
    tol: float = field(default_factory=lambda: Config.FLOQUET_TOL)
    max_harmonics: int = field(default_factory=lambda: Config.FLOQUET_MAX_HARMONICS)
    batch_size: int = field(default_factory=lambda: Config.BATCH_SIZE)
    threads: Optional[int] = None


@dataclass(frozen=True)
class SusceptibilityResponse:
    """Harmonic transfer matrices chi[..., n+M, m+M] at each two-photon detuning."""

    chi: np.ndarray
    detuning: np.ndarray
    sidebands: int

    def element(self, n: int, m: int) -> np.ndarray:
        M = self.sidebands
        return self.chi[..., n + M, m + M]

    @property
    def fundamental(self) -> np.ndarray:
        return self.element(0, 0)


@dataclass
class Spectrum:
    detuning: np.ndarray
    transmission: np.ndarray
    intensities: Optional[np.ndarray] = None
    sidebands: int = 0
    nu_rf: float = 0.0
    doppler_averaged: bool = False
    passive: bool = True
    max_total_intensity: float = 0.0
    lines: List[Line] = field(default_factory=list)

    @property
    def orders(self) -> np.ndarray:
        return np.arange(-self.sidebands, self.sidebands + 1)

    def intensity(self, n: int) -> np.ndarray:
        if self.intensities is None:
            raise ValueError("spectrum has no sideband intensities")
        return self.intensities[:, n + self.sidebands]


def _steady_state(L: LiouvillianHarmonics, nu_rf: float, settings: SolverSettings) -> HarmonicState:
    if not L.is_periodic:
        return floquet_steady_state(L, 0.0, 0)
    if settings.truncation is not None:
        return floquet_steady_state(L, nu_rf, settings.truncation)
    return floquet_steady_state_auto(L, nu_rf, settings.tol, settings.max_harmonics)


def coherence_harmonics(
    sys: AtomSystem,
    fields: FieldSet,
    deltas: np.ndarray,
    shifts: np.ndarray,
    reach: int,
    settings: Optional[SolverSettings] = None,
) -> np.ndarray:
    """Response coefficients c_k for |k| <= reach at every (Doppler shift, detuning) pair.

    Returns shape (len(shifts), len(deltas), 2*reach+1).
    """
    settings = settings or SolverSettings()
    if not fields.alpha_probe > 0:
        raise ModelError("alpha_probe must be positive to extract the probe response")
    if sys.gamma_transit == 0 and sys.gamma_deph == 0:
        # dark superpositions and undriven ground levels all trap population
        raise SingularSystemError("ground decoherence rates are all zero; the steady state is not unique")
    deltas = np.atleast_1d(np.asarray(deltas, dtype=float))
    shifts = np.atleast_1d(np.asarray(shifts, dtype=float))
    a, b = sys.index("a"), sys.index("b")
    scale = -0.5 * sys.gamma_rad / fields.alpha_probe
    orders = range(-reach, reach + 1)

    shift_grid, delta_grid = np.meshgrid(shifts, deltas, indexing="ij")
    pairs = np.stack([shift_grid.ravel(), delta_grid.ravel()], axis=1)

    def solve_chunk(chunk: np.ndarray) -> np.ndarray:
        shift, delta = chunk[:, 0], chunk[:, 1]
        L = liouvillian_stack(sys, fields, delta + fields.delta_drive + shift, delta)
        state = _steady_state(L, fields.nu_rf, settings)
        out = np.empty((chunk.shape[0], 2 * reach + 1), dtype=complex)
        for j, k in enumerate(orders):
            out[:, j] = state.harmonic(k)[:, a, b]
        return scale * out

    result = map_chunks(solve_chunk, pairs, settings.batch_size, settings.threads)
    return result.reshape(shifts.size, deltas.size, 2 * reach + 1)


def shifted_detunings(deltas: np.ndarray, nu_rf: float, sidebands: int) -> Tuple[np.ndarray, np.ndarray]:
    """Distinct detunings delta - m*nu_rf and, per (delta, m), the index into them."""
    orders = np.arange(-sidebands, sidebands + 1)
    shifted = np.asarray(deltas, dtype=float)[:, None] - nu_rf * orders[None, :]
    quantum = 1e-9 * max(float(np.max(np.abs(shifted))), 1e-12)
    keys = np.round(shifted / quantum).astype(np.int64)
    _, first, inverse = np.unique(keys.ravel(), return_index=True, return_inverse=True)
    return shifted.ravel()[first], inverse.reshape(shifted.shape)


def assemble_transfer_matrix(c: np.ndarray, inverse: np.ndarray, sidebands: int) -> np.ndarray:
    """chi[..., j, n, m] = c[..., inverse[j, m], n - m] from coefficients at distinct detunings."""
    M = sidebands
    orders = np.arange(-M, M + 1)
    k_index = (orders[:, None] - orders[None, :]) + 2 * M
    return c[..., inverse[:, None, :], k_index]


def _coefficients(
    sys: AtomSystem,
    fields: FieldSet,
    unique: np.ndarray,
    reach: int,
    doppler: Optional[DopplerDistribution],
    settings: SolverSettings,
) -> np.ndarray:
    if doppler is None:
        return coherence_harmonics(sys, fields, unique, [fields.doppler_shift], reach, settings)[0]

    def sampler(shifts: np.ndarray) -> np.ndarray:
        return coherence_harmonics(sys, fields, unique, shifts, reach, settings)

    # the inner solves already run on the thread pool
    return gauss_average(sampler, doppler, threads=1)


def probe_susceptibility(
    sys: AtomSystem,
    fields: FieldSet,
    delta,
    sidebands: int = 0,
    doppler: Optional[DopplerDistribution] = None,
    settings: Optional[SolverSettings] = None,
    check_linearity: bool = False,
    rtol: Optional[float] = None,
) -> SusceptibilityResponse:
    """Harmonic transfer matrix chi_nm, |n|, |m| <= sidebands, at the two-photon detuning(s) delta.

    The RF frequency is fields.nu_rf. With check_linearity the solve is
    repeated at half the probe amplitude and must agree within rtol.
    """
    settings = settings or SolverSettings()
    deltas = np.atleast_1d(np.asarray(delta, dtype=float))
    fields.in_linear_regime()

    def compute(f: FieldSet) -> np.ndarray:
        unique, inverse = shifted_detunings(deltas, f.nu_rf, sidebands)
        c = _coefficients(sys, f, unique, 2 * sidebands, doppler, settings)
        return assemble_transfer_matrix(c, inverse, sidebands)

    chi = compute(fields)
    if check_linearity:
        rtol = Config.LINEARITY_RTOL if rtol is None else rtol
        half = compute(fields.replace(alpha_probe=0.5 * fields.alpha_probe))
        deviation = float(np.max(np.abs(chi - half))) / max(float(np.max(np.abs(chi))), 1e-300)
        if deviation > rtol:
            raise LinearityError(
                f"susceptibility changed by {deviation:.3%} when the probe was halved (allowed {rtol:.1%}); "
                "reduce alpha_probe"
            )
        logger.info("Probe linearity check passed (deviation %.2e)", deviation)
    return SusceptibilityResponse(chi=chi, detuning=deltas, sidebands=sidebands)


def static_susceptibility(sys: AtomSystem, fields: FieldSet, delta) -> np.ndarray:
    """chi_00 from the unique steady state of a time-independent model."""
    return probe_susceptibility(sys, fields, delta, sidebands=0).fundamental


def propagate(chi: np.ndarray, optical_depth: float, sidebands: int) -> np.ndarray:
    """Output harmonic amplitudes for a unit probe in harmonic 0: E = expm(i*OD/2*chi) e_0."""
    return expm(0.5j * optical_depth * chi)[..., :, sidebands]


def _check_passivity(intensities: np.ndarray) -> Tuple[bool, float]:
    total = float(np.max(np.sum(intensities, axis=-1)))
    passive = total <= 1.0 + PASSIVITY_SLACK
    if not passive:
        logger.warning("Sideband comb is not passive: total output intensity reaches %.6g", total)
    return passive, total


def sideband_comb(
    sys: AtomSystem,
    fields: FieldSet,
    medium: MediumSpec,
    grid,
    sidebands: int = 4,
    doppler: Optional[DopplerDistribution] = None,
    settings: Optional[SolverSettings] = None,
    propagation: str = AVERAGED,
    check_linearity: bool = False,
) -> Spectrum:
    """Output intensities I_n(delta) of every probe harmonic after the cell."""
    if propagation not in PROPAGATION_MODES:
        raise ModelError(f"unknown propagation mode '{propagation}', expected one of {PROPAGATION_MODES}")
    settings = settings or SolverSettings()
    deltas = np.atleast_1d(np.asarray(grid, dtype=float))
    od = medium.optical_depth

    if propagation == PER_VELOCITY and doppler is not None:
        fields.in_linear_regime()
        unique, inverse = shifted_detunings(deltas, fields.nu_rf, sidebands)

        def sampler(shifts: np.ndarray) -> np.ndarray:
            c = coherence_harmonics(sys, fields, unique, shifts, 2 * sidebands, settings)
            return propagate(assemble_transfer_matrix(c, inverse, sidebands), od, sidebands)

        amplitudes = gauss_average(sampler, doppler, threads=1)
    else:
        response = probe_susceptibility(
            sys, fields, deltas, sidebands, doppler, settings, check_linearity=check_linearity
        )
        amplitudes = propagate(response.chi, od, sidebands)

    intensities = np.abs(amplitudes) ** 2
    passive, total = _check_passivity(intensities)
    logger.info("Computed %d-sideband comb over %d detunings", sidebands, deltas.size)
    return Spectrum(
        detuning=deltas,
        transmission=intensities[:, sidebands],
        intensities=intensities,
        sidebands=sidebands,
        nu_rf=fields.nu_rf,
        doppler_averaged=doppler is not None,
        passive=passive,
        max_total_intensity=total,
    )


def transmission_spectrum(
    sys: AtomSystem,
    fields: FieldSet,
    medium: MediumSpec,
    grid,
    doppler: Optional[DopplerDistribution] = None,
    settings: Optional[SolverSettings] = None,
    propagation: str = AVERAGED,
    check_linearity: bool = False,
) -> Spectrum:
    """Fundamental transmission T0(delta) = exp(-OD * Im chi_00), with its lines located."""
    if propagation not in PROPAGATION_MODES:
        raise ModelError(f"unknown propagation mode '{propagation}', expected one of {PROPAGATION_MODES}")
    deltas = np.atleast_1d(np.asarray(grid, dtype=float))
    od = medium.optical_depth

    if propagation == PER_VELOCITY and doppler is not None:
        spectrum = sideband_comb(sys, fields, medium, deltas, 0, doppler, settings, PER_VELOCITY)
        transmission = spectrum.transmission
    else:
        response = probe_susceptibility(
            sys, fields, deltas, 0, doppler, settings, check_linearity=check_linearity
        )
        transmission = np.exp(-od * response.fundamental.imag)

    kind = TRANSMISSION if doppler is not None else ABSORPTION
    lines = find_lines(deltas, transmission, kind) if deltas.size >= 3 else []
    logger.info("Transmission spectrum: %d points, %d %s lines", deltas.size, len(lines), kind)
    return Spectrum(
        detuning=deltas,
        transmission=transmission,
        doppler_averaged=doppler is not None,
        lines=lines,
    )


def analyzer_trace(spectrum: Spectrum, bandwidth_fwhm: float, offsets: np.ndarray, index: int) -> np.ndarray:
    """Comb at one grid point as seen through a Gaussian analyzer filter of the given FWHM.

    Harmonic n sits at offset n*nu_rf from the probe carrier; the filter has unit peak gain.
    """
    if spectrum.intensities is None:
        raise ValueError("analyzer view needs a sideband comb")
    if not bandwidth_fwhm > 0:
        raise ValueError(f"analyzer bandwidth must be positive, got {bandwidth_fwhm}")
    offsets = np.asarray(offsets, dtype=float)
    lines = spectrum.orders * spectrum.nu_rf
    filt = np.exp(-4.0 * math.log(2.0) * ((offsets[:, None] - lines[None, :]) / bandwidth_fwhm) ** 2)
    return filt @ spectrum.intensities[index]


def detuning_grid(
    fields: FieldSet,
    points: int,
    span: Optional[float] = None,
    refine_step: Optional[float] = None,
    refine_halfwidth: Optional[float] = None,
    align: bool = False,
) -> np.ndarray:
    """Two-photon detuning grid over +/-span.

    Defaults to +/-1.5*max(Omega, 3*nu_rf). With refine_step, points spaced
    by at most refine_step are added within refine_halfwidth of 0 and
    +/-nu_rf, aligned so those centres are grid points. With align the
    uniform step is adjusted to divide nu_rf so shifted detunings reuse solves.
    """
    if points < 3:
        raise ValueError(f"grid needs at least 3 points, got {points}")
    nu = fields.nu_rf
    if span is None:
        span = 1.5 * max(fields.omega_drive, 3.0 * nu)
    if not span > 0:
        raise ValueError("grid span must be positive; set grid_span or a nonzero drive")

    if align and nu > 0:
        step = 2.0 * span / (points - 1)
        step = nu / max(round(nu / step), 1)
        half = int(round(span / step))
        base = step * np.arange(-half, half + 1)
    else:
        base = np.linspace(-span, span, points)

    if not refine_step:
        return base

    halfwidth = refine_halfwidth or 10.0 * refine_step
    centres = [0.0] + ([nu, -nu] if nu > 0 else [])
    step = refine_step
    if nu > 0:
        step = nu / math.ceil(nu / refine_step)
    count = int(math.ceil(halfwidth / step))
    extra = [c + step * np.arange(-count, count + 1) for c in centres]
    merged = np.concatenate([base] + extra)
    merged = merged[np.abs(merged) <= span * (1.0 + 1e-12)]
    merged.sort()
    keep = np.concatenate([[True], np.diff(merged) > 1e-9 * span])
    return merged[keep]
