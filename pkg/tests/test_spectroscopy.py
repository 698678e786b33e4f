"""
Tests for probe susceptibility, transmission spectra and the sideband comb.
"""
import numpy as np
import pytest

from darkcomb.run_config import load_run_config
from darkcomb.services.doppler import DopplerDistribution
from darkcomb.services.floquet import SingularSystemError, floquet_steady_state
from darkcomb.services.lines import ABSORPTION, TRANSMISSION, find_lines
from darkcomb.services.model import AtomSystem, FieldSet, ModelError, ModelKind, build_model_liouvillian
from darkcomb.services.spectroscopy import (
    PER_VELOCITY,
    LinearityError,
    MediumSpec,
    SolverSettings,
    analyzer_trace,
    assemble_transfer_matrix,
    coherence_harmonics,
    detuning_grid,
    probe_susceptibility,
    shifted_detunings,
    sideband_comb,
    static_susceptibility,
    transmission_spectrum,
)

FIXED = SolverSettings(truncation=8)


def _rf_fields(**kwargs):
    defaults = dict(omega_drive=0.5, alpha_probe=0.01, omega_rf=0.2, nu_rf=0.3)
    defaults.update(kwargs)
    return FieldSet(**defaults)


@pytest.mark.unit
class TestMediumSpec:
    def test_optical_depth_from_density(self):
        medium = MediumSpec(length_cm=2.0, density_cm3=1e11, cross_section_cm2=1e-12)
        assert medium.optical_depth == pytest.approx(0.2)
        assert medium.absorption_coefficient == pytest.approx(0.1)

    def test_override_wins(self):
        medium = MediumSpec(density_cm3=1e20, optical_depth_override=3.0)
        assert medium.optical_depth == 3.0

    def test_negative_rejected(self):
        with pytest.raises(ModelError):
            MediumSpec.from_optical_depth(-1.0)


@pytest.mark.unit
class TestProbeResponse:
    """Susceptibility of single atoms without Doppler averaging."""

    def test_bare_two_level_normalization(self):
        # every decay returns to b, so the probe transition stays closed
        closed = dict(branching=(1.0, 0.0, 0.0), gamma_transit=1e-6, gamma_deph=0.0)
        fields = FieldSet(alpha_probe=1e-4)
        chi = static_susceptibility(AtomSystem(kind=ModelKind.SINGLE, **closed), fields, [0.0, 0.5])
        # a third of the atoms sit in b; the line has a half width of gamma_rad/2
        assert chi[0].imag == pytest.approx(1 / 3, rel=1e-4)
        assert chi[0].real == pytest.approx(0.0, abs=1e-8)
        assert chi[1].imag / chi[0].imag == pytest.approx(0.5, rel=1e-4)
        periodic = probe_susceptibility(AtomSystem(**closed), fields, [0.0]).fundamental
        assert periodic[0] == pytest.approx(chi[0], rel=1e-10)

    def test_dark_resonance_is_transparent(self):
        sys = AtomSystem(gamma_transit=1e-5, gamma_deph=0.0)
        fields = FieldSet(omega_drive=0.5, alpha_probe=1e-3)
        chi = probe_susceptibility(sys, fields, [0.0, 0.5]).fundamental
        assert abs(chi[0].imag) < 2e-4
        assert chi[1].imag > 0.05

    def test_dark_resonance_absorption_vanishes_with_decoherence(self):
        fields = FieldSet(omega_drive=0.5, alpha_probe=1e-4)
        residual = [
            static_susceptibility(AtomSystem(kind=ModelKind.SINGLE, gamma_transit=rate, gamma_deph=0.0), fields,
                                  [0.0])[0].imag
            for rate in (1e-5, 1e-6)
        ]
        assert 0.0 < residual[1] < 1e-5
        assert residual[0] / residual[1] == pytest.approx(10.0, rel=0.05)

    def test_zero_decoherence_is_singular(self):
        sys = AtomSystem(kind=ModelKind.SINGLE, gamma_transit=0.0, gamma_deph=0.0)
        with pytest.raises(SingularSystemError, match="decoherence rates are all zero"):
            static_susceptibility(sys, FieldSet(omega_drive=0.5, alpha_probe=1e-4), [0.0])

    def test_split_and_periodic_models_agree_at_line_centres(self):
        fields = FieldSet(omega_drive=1.0, alpha_probe=1e-4, omega_rf=0.02, nu_rf=0.1)
        centres = np.array([-0.1, 0.1])
        rates = dict(gamma_transit=1e-6, gamma_deph=0.01)
        static = static_susceptibility(AtomSystem(kind=ModelKind.SPLIT, **rates), fields, centres)
        periodic = probe_susceptibility(AtomSystem(kind=ModelKind.PERIODIC, **rates), fields, centres,
                                        settings=FIXED).fundamental
        np.testing.assert_allclose(periodic.imag, static.imag, rtol=0.05)
        # the lines stand well above the transparency background
        background = static_susceptibility(AtomSystem(kind=ModelKind.SPLIT, **rates),
                                           fields.replace(omega_rf=0.0), centres)
        assert np.all(static.imag > 1.3 * background.imag)

    def test_detuned_perturber_shifts_narrow_line(self):
        sys = AtomSystem(kind=ModelKind.SINGLE, gamma_transit=1e-5, gamma_deph=0.002)
        positions = []
        for shift in (0.05, 0.1):
            fields = FieldSet(omega_drive=0.5, alpha_probe=1e-4, omega_rf=0.01, nu_rf=shift)
            grid = shift * np.linspace(0.7, 1.3, 601)
            chi = static_susceptibility(sys, fields, grid)
            line = max(find_lines(grid, chi.imag, TRANSMISSION), key=lambda found: found.depth)
            assert line.position == pytest.approx(shift, abs=0.1 * shift)
            positions.append(line.position)
        assert positions[1] - positions[0] == pytest.approx(0.05, rel=0.1)

    def test_no_rf_has_no_sideband_coupling(self, periodic_system):
        fields = _rf_fields(omega_rf=0.0)
        deltas = np.array([-0.2, 0.0, 0.1])
        response = probe_susceptibility(periodic_system, fields, deltas, sidebands=1)
        off = response.chi.copy()
        off[:, np.arange(3), np.arange(3)] = 0.0
        assert not np.any(off)
        c0 = probe_susceptibility(periodic_system, fields, deltas - 0.3).fundamental
        np.testing.assert_allclose(response.element(1, 1), c0, rtol=1e-12)

    def test_transfer_matrix_structure(self, periodic_system):
        fields = _rf_fields(delta_probe=0.0)
        deltas = np.array([-0.15, 0.05])
        response = probe_susceptibility(periodic_system, fields, deltas, sidebands=1, settings=FIXED)
        c = coherence_harmonics(periodic_system, fields, deltas - 0.3, [0.0], 2, FIXED)[0]
        # chi_{n,1}(delta) = c_{n-1}(delta - nu)
        np.testing.assert_allclose(response.element(-1, 1), c[:, 0], rtol=1e-10)
        np.testing.assert_allclose(response.element(1, 1), c[:, 2], rtol=1e-10)

    def test_coefficients_follow_the_coherence_harmonics(self, periodic_system):
        fields = _rf_fields(delta_drive=0.1)
        delta = 0.04
        c = coherence_harmonics(periodic_system, fields, [delta], [0.0], 2, FIXED)[0, 0]
        L = build_model_liouvillian(periodic_system, fields.replace(delta_probe=delta + 0.1))
        state = floquet_steady_state(L, 0.3, 8)
        expected = -0.5 / fields.alpha_probe * state.coherence(0, 1)[8 - 2:8 + 3]
        np.testing.assert_allclose(c, expected, rtol=1e-10, atol=1e-12 * np.max(np.abs(expected)))

    def test_zero_probe_rejected(self, periodic_system):
        with pytest.raises(ModelError, match="alpha_probe"):
            coherence_harmonics(periodic_system, _rf_fields(alpha_probe=0.0), [0.0], [0.0], 0)

    def test_linearity_check_raises_on_saturation(self, periodic_system, mocker):
        def saturating(sys, fields, unique, reach, doppler, settings):
            return np.full((unique.size, 2 * reach + 1), 1j * fields.alpha_probe)

        mocker.patch("darkcomb.services.spectroscopy._coefficients", side_effect=saturating)
        with pytest.raises(LinearityError, match="probe was halved"):
            probe_susceptibility(periodic_system, _rf_fields(), [0.0], check_linearity=True, rtol=0.01)

    def test_linearity_check_passes_in_weak_probe_regime(self, periodic_system):
        response = probe_susceptibility(
            periodic_system, _rf_fields(alpha_probe=1e-4), [0.0, 0.1], settings=FIXED, check_linearity=True
        )
        assert response.chi.shape == (2, 1, 1)


@pytest.mark.unit
class TestNarrowLineScaling:
    """Width of the central narrow line under a weak degenerate perturbation."""

    def test_width_grows_with_perturber_intensity(self):
        sys = AtomSystem(kind=ModelKind.SINGLE, gamma_transit=1e-5, gamma_deph=0.0)
        omega = 0.5
        couplings = omega * np.linspace(0.01, 0.1, 8)
        widths = []
        for omega_rf in couplings:
            fields = FieldSet(omega_drive=omega, alpha_probe=1e-4, omega_rf=omega_rf)
            grid = np.linspace(-0.5 * omega_rf, 0.5 * omega_rf, 401)
            chi = static_susceptibility(sys, fields, grid)
            line = max(find_lines(grid, chi.imag, TRANSMISSION), key=lambda found: found.depth)
            assert line.position == pytest.approx(0.0, abs=grid[1] - grid[0])
            assert line.resolved and not line.at_boundary
            widths.append(line.fwhm)

        widths = np.array(widths)
        slope, intercept = np.polyfit(couplings ** 2, widths, 1)
        fitted = slope * couplings ** 2 + intercept
        r_squared = 1.0 - np.sum((widths - fitted) ** 2) / np.sum((widths - widths.mean()) ** 2)
        assert r_squared > 0.99
        assert slope == pytest.approx(1.0 / omega ** 2, rel=0.1)
        # decoherence-limited width when the perturber vanishes
        assert abs(intercept) < 0.05 * widths.max()


@pytest.mark.unit
class TestShiftedDetunings:
    def test_aligned_grid_reuses_solves(self):
        nu = 0.3
        deltas = np.arange(-10, 11) * (nu / 5)
        unique, inverse = shifted_detunings(deltas, nu, 2)
        assert unique.size < deltas.size * 5
        orders = np.arange(-2, 3)
        np.testing.assert_allclose(unique[inverse], deltas[:, None] - nu * orders[None, :], atol=1e-12)

    def test_assemble_indexes_by_order_difference(self):
        rng = np.random.default_rng(7)
        deltas = np.array([0.0, 0.13])
        unique, inverse = shifted_detunings(deltas, 0.2, 1)
        c = rng.normal(size=(unique.size, 5)) + 1j * rng.normal(size=(unique.size, 5))
        chi = assemble_transfer_matrix(c, inverse, 1)
        assert chi.shape == (2, 3, 3)
        for j in range(2):
            for n in range(-1, 2):
                for m in range(-1, 2):
                    assert chi[j, n + 1, m + 1] == c[inverse[j, m + 1], n - m + 2]


@pytest.mark.unit
class TestTransmission:
    def test_transparency_at_two_photon_resonance(self):
        fields = FieldSet(omega_drive=0.2, alpha_probe=0.002)
        spectrum = transmission_spectrum(AtomSystem(), fields, MediumSpec.from_optical_depth(1.0), [-0.2, 0.0, 0.2])
        assert spectrum.transmission[1] > spectrum.transmission[0]
        assert spectrum.transmission[1] > spectrum.transmission[2]
        assert not spectrum.doppler_averaged

    def test_perturber_opens_absorption_lines_at_rf_detuning(self):
        nu = 0.05
        sys = AtomSystem(kind=ModelKind.SPLIT)
        fields = FieldSet(omega_drive=0.5, alpha_probe=1e-3, omega_rf=0.01, nu_rf=nu)
        grid = np.linspace(-2 * nu, 2 * nu, 801)
        spectrum = transmission_spectrum(sys, fields, MediumSpec.from_optical_depth(1.0), grid)
        lines = [line for line in spectrum.lines if abs(line.position) < 1.8 * nu]
        assert len(lines) == 2
        assert all(line.kind == ABSORPTION for line in lines)
        positions = sorted(line.position for line in lines)
        assert positions[0] == pytest.approx(-nu, abs=0.1 * nu)
        assert positions[1] == pytest.approx(nu, abs=0.1 * nu)
        assert positions[0] + positions[1] == pytest.approx(0.0, abs=1e-8)

    def test_unknown_propagation_mode(self, periodic_system):
        with pytest.raises(ModelError, match="propagation"):
            transmission_spectrum(periodic_system, _rf_fields(), MediumSpec(), [0.0], propagation="sideways")


@pytest.mark.unit
class TestSidebandComb:
    """Output harmonics after propagation through the cell."""

    def test_no_rf_comb_reduces_to_transmission(self, periodic_system):
        fields = _rf_fields(omega_rf=0.0)
        grid = np.linspace(-0.6, 0.6, 13)
        medium = MediumSpec.from_optical_depth(2.0)
        comb = sideband_comb(periodic_system, fields, medium, grid, sidebands=2)
        plain = transmission_spectrum(periodic_system, fields, medium, grid)
        np.testing.assert_allclose(comb.intensity(0), plain.transmission, rtol=1e-12)
        for n in (-2, -1, 1, 2):
            assert not np.any(comb.intensity(n))
        assert comb.passive

    def test_odd_harmonics_vanish_without_static_mixing(self, periodic_system):
        grid = np.linspace(-0.6, 0.6, 9)
        comb = sideband_comb(periodic_system, _rf_fields(), MediumSpec.from_optical_depth(1.0), grid,
                             sidebands=2, settings=FIXED)
        assert np.max(comb.intensities[:, [1, 3]]) < 1e-20
        assert np.min(comb.intensity(0)) > 0.1

    def test_rf_generates_sidebands(self, periodic_system):
        comb = sideband_comb(periodic_system, _rf_fields(), MediumSpec.from_optical_depth(5.0), [0.0, 0.3],
                             sidebands=2, settings=FIXED)
        assert comb.intensities.shape == (2, 5)
        assert np.all(comb.intensity(2) > 0)
        assert np.all(comb.intensities >= 0)
        assert comb.nu_rf == 0.3

    @pytest.mark.parametrize("doppler", [None, DopplerDistribution(width_fwhm=4.0)])
    def test_rf_comb_is_passive(self, doppler):
        sys = AtomSystem(gamma_transit=1e-3, gamma_deph=0.02)
        grid = np.linspace(-0.6, 0.6, 13)
        comb = sideband_comb(sys, _rf_fields(), MediumSpec.from_optical_depth(5.0), grid, sidebands=3,
                             doppler=doppler, settings=FIXED)
        assert np.max(comb.intensities[:, [1, 5]]) > 0
        assert comb.passive
        assert np.all(comb.intensities.sum(axis=1) <= 1.0 + 1e-6)
        assert comb.max_total_intensity <= 1.0 + 1e-6

    def test_thin_medium_averaging_order_does_not_matter(self):
        sys = AtomSystem(gamma_transit=1e-3, gamma_deph=0.02)
        doppler = DopplerDistribution(width_fwhm=4.0)
        grid = np.linspace(-0.6, 0.6, 7)
        medium = MediumSpec.from_optical_depth(0.02)
        averaged = sideband_comb(sys, _rf_fields(), medium, grid, sidebands=2, doppler=doppler, settings=FIXED)
        per_velocity = sideband_comb(sys, _rf_fields(), medium, grid, sidebands=2, doppler=doppler,
                                     settings=FIXED, propagation=PER_VELOCITY)
        np.testing.assert_allclose(per_velocity.intensity(0), averaged.intensity(0), rtol=1e-2)
        np.testing.assert_allclose(per_velocity.intensities, averaged.intensities, rtol=1e-2, atol=1e-5)

    def test_analyzer_picks_out_harmonics(self, periodic_system):
        comb = sideband_comb(periodic_system, _rf_fields(), MediumSpec.from_optical_depth(5.0), [0.0],
                             sidebands=2, settings=FIXED)
        trace = analyzer_trace(comb, 1e-3, np.array([-0.6, 0.0, 0.6]), 0)
        np.testing.assert_allclose(trace, comb.intensities[0, [0, 2, 4]], rtol=1e-12)

    def test_analyzer_needs_comb(self, periodic_system):
        spectrum = transmission_spectrum(periodic_system, _rf_fields(), MediumSpec(), [0.0], settings=FIXED)
        with pytest.raises(ValueError, match="comb"):
            analyzer_trace(spectrum, 0.01, np.zeros(1), 0)


@pytest.mark.unit
class TestDetuningGrid:
    def test_default_span(self):
        grid = detuning_grid(FieldSet(omega_drive=2.0, nu_rf=0.1), 11)
        assert grid[0] == pytest.approx(-3.0)
        assert grid[-1] == pytest.approx(3.0)

    def test_aligned_step_divides_rf_frequency(self):
        nu = 0.3
        grid = detuning_grid(FieldSet(omega_drive=1.0, nu_rf=nu), 101, span=1.0, align=True)
        step = grid[1] - grid[0]
        assert nu / step == pytest.approx(round(nu / step), abs=1e-9)
        assert np.any(np.isclose(grid, 0.0))
        assert np.any(np.isclose(grid, nu))

    def test_refinement_hits_resonances(self):
        nu = 0.3
        grid = detuning_grid(FieldSet(omega_drive=1.0, nu_rf=nu), 21, span=1.0, refine_step=0.01,
                             refine_halfwidth=0.05)
        for centre in (-nu, 0.0, nu):
            assert np.min(np.abs(grid - centre)) < 1e-12
            near = grid[np.abs(grid - centre) <= 0.05]
            assert np.max(np.diff(near)) <= 0.01 + 1e-12
        assert np.all(np.diff(grid) > 0)

    def test_too_few_points(self):
        with pytest.raises(ValueError, match="at least 3"):
            detuning_grid(FieldSet(omega_drive=1.0), 2)


def _window_lines(config, lo, hi, points, settings=FIXED):
    nu = config.field_set().nu_rf
    grid = nu * np.linspace(lo, hi, points)
    spectrum = transmission_spectrum(config.atom_system(), config.field_set(), config.medium(), grid,
                                     doppler=config.doppler(), settings=settings)
    return spectrum.lines


def _strongest(lines):
    assert lines, "no line found in the scan window"
    return max(lines, key=lambda line: line.depth)


@pytest.fixture(scope="module")
def novel_lines():
    """Strongest line near +nu_rf for the 350 kHz presets, Doppler-free and averaged."""
    return {
        "free": _strongest(_window_lines(load_run_config(preset="fig3a"), 0.8, 1.2, 81)),
        "500 MHz": _strongest(_window_lines(load_run_config(preset="fig3b"), 0.9, 1.15, 51)),
        "5 GHz": _strongest(_window_lines(
            load_run_config(preset="fig3c", overrides={"doppler_patch_step": 2.5e6}), 0.9, 1.15, 51)),
    }


@pytest.mark.slow
class TestReferenceScenarios:
    """The 350 kHz and sideband presets, on reduced grids."""

    def test_doppler_preset_converges_with_default_tolerances(self):
        config = load_run_config(preset="fig3b")
        nu = config.field_set().nu_rf
        chi = probe_susceptibility(config.atom_system(), config.field_set(), [0.0, nu],
                                   doppler=config.doppler(), settings=config.solver_settings()).fundamental
        transmission = np.exp(-config.medium().optical_depth * chi.imag)
        assert np.all(np.isfinite(transmission))
        assert np.all((transmission > 0) & (transmission <= 1.0))
        assert transmission[0] > transmission[1]

    @pytest.mark.parametrize("sign", [-1, 1])
    def test_doppler_free_absorption_lines_at_rf_frequency(self, sign):
        config = load_run_config(preset="fig3a")
        nu = config.field_set().nu_rf
        lo, hi = sorted((sign * 0.8, sign * 1.2))
        line = _strongest(_window_lines(config, lo, hi, 81))
        assert line.kind == ABSORPTION
        # the perturber light-shifts the line outward by a small fraction of nu_rf
        assert line.position == pytest.approx(sign * nu, abs=0.05 * nu)

    def test_averaged_transmission_line_at_rf_frequency(self, novel_lines):
        nu = load_run_config(preset="fig3b").field_set().nu_rf
        line = novel_lines["500 MHz"]
        assert line.kind == TRANSMISSION
        assert line.position == pytest.approx(nu, abs=0.05 * nu)

    def test_doppler_narrowing(self, novel_lines):
        free, moderate, wide = novel_lines["free"], novel_lines["500 MHz"], novel_lines["5 GHz"]
        assert all(line.resolved and not line.at_boundary for line in (free, moderate, wide))
        assert wide.fwhm < moderate.fwhm < free.fwhm

    def test_doppler_averaging_enhances_sidebands(self):
        config = load_run_config(preset="fig6b")
        nu = config.field_set().nu_rf
        grid = np.array([-nu, 0.0, nu])

        def ratios(doppler):
            comb = sideband_comb(config.atom_system(), config.field_set(), config.medium(), grid,
                                 sidebands=4, doppler=doppler, settings=config.solver_settings())
            first = max(comb.intensity(-2).max(), comb.intensity(2).max())
            second = max(comb.intensity(-4).max(), comb.intensity(4).max())
            return first / comb.intensity(0).max(), second / first

        free = ratios(None)
        averaged = ratios(config.doppler())
        assert averaged[0] >= 10.0 * free[0]
        assert averaged[1] >= 10.0 * free[1]
