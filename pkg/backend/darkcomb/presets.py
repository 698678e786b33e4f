"""
Named scenarios for the reference measurements, sized to run on a laptop.

The RF Rabi frequencies are not measured quantities: they are fitted from
the RF amplitudes quoted for each measurement at 12.5 kHz per mG, and the
drive Rabi frequencies are chosen values. Both are marked in the listing.
"""
import difflib
from dataclasses import dataclass
from typing import Any, Dict, List

from .run_config import ConfigError, parse_text

# Fitted RF coupling per unit RF field amplitude
RF_RABI_HZ_PER_MG = 12.5e3


@dataclass(frozen=True)
class Preset:
    name: str
    description: str
    text: str

    @property
    def values(self) -> Dict[str, Any]:
        values = parse_text(self.text, source=f"preset {self.name}")
        values["preset"] = self.name
        return values


def _rf(mg: float) -> str:
    return f"{mg * RF_RABI_HZ_PER_MG / 1e3:g} kHz"


_FIG3 = """
command = spectrum
model = periodic
nu_rf = 350 kHz
omega_drive = 10 MHz
omega_rf = 100 kHz
grid_span = 1 MHz
grid_points = 801
"""

_PRESETS: List[Preset] = [
    Preset(
        "fig2",
        "Degenerate RF, single perturber: narrow absorption line splitting the transparency "
        "(Omega_c 100 kHz fitted, drive 2.5 MHz)",
        """
        command = spectrum
        model = single
        nu_rf = 0 Hz
        omega_drive = 2.5 MHz
        omega_rf = 100 kHz
        optical_depth = 1
        grid_span = 300 kHz
        grid_points = 1201
        """,
    ),
    Preset(
        "fig3a",
        "RF 350 kHz, Doppler-free: absorption lines at +/-nu_RF inside the EIT window (Omega_c fitted)",
        _FIG3 + "optical_depth = 1\n",
    ),
    Preset(
        "fig3b",
        "RF 350 kHz, Doppler 500 MHz FWHM: narrowed transmission lines at +/-nu_RF (Omega_c fitted)",
        _FIG3 + "optical_depth = 100\ndoppler_fwhm = 500 MHz\n",
    ),
    Preset(
        "fig3c",
        "RF 350 kHz, Doppler 5 GHz FWHM: further Doppler narrowing (Omega_c fitted)",
        _FIG3 + "optical_depth = 100\ndoppler_fwhm = 5 GHz\n",
    ),
    Preset(
        "fig5",
        "Dressed eigenvalues vs Doppler shift, drive 5 MHz, Omega_c 0.5 MHz, Delta_RF 1.5 MHz",
        """
        command = eigenvalues
        omega_drive = 5 MHz
        omega_rf = 500 kHz
        nu_rf = 1.5 MHz
        doppler_span = 50 MHz
        doppler_points = 1001
        """,
    ),
    Preset(
        "fig6a",
        f"Sideband comb, RF 100 kHz at 20 mG (Omega_c {_rf(20)} fitted), Doppler 530 MHz",
        f"""
        command = comb
        nu_rf = 100 kHz
        omega_rf = {_rf(20)}
        omega_drive = 10 MHz
        doppler_fwhm = 530 MHz
        optical_depth = 100
        sidebands = 4
        grid_span = 400 kHz
        grid_points = 161
        """,
    ),
    Preset(
        "fig6b",
        f"Sideband comb, RF 350 kHz at 80 mG (Omega_c {_rf(80)} fitted), Doppler 530 MHz",
        f"""
        command = comb
        nu_rf = 350 kHz
        omega_rf = {_rf(80)}
        omega_drive = 10 MHz
        doppler_fwhm = 530 MHz
        optical_depth = 100
        sidebands = 4
        grid_span = 1.4 MHz
        grid_points = 281
        """,
    ),
    Preset(
        "fig7",
        f"RF 350 kHz at 160 mG (Omega_c {_rf(160)} fitted): multiple sidebands, 30 kHz analyzer view",
        f"""
        command = comb
        nu_rf = 350 kHz
        omega_rf = {_rf(160)}
        omega_drive = 10 MHz
        doppler_fwhm = 530 MHz
        optical_depth = 100
        sidebands = 6
        grid_span = 1.4 MHz
        grid_points = 281
        analyzer_bandwidth = 30 kHz
        """,
    ),
]

PRESETS: Dict[str, Preset] = {p.name: p for p in _PRESETS}


def preset_values(name: str) -> Dict[str, Any]:
    preset = PRESETS.get(name)
    if preset is None:
        matches = difflib.get_close_matches(name, PRESETS, n=1)
        raise ConfigError(f"unknown preset '{name}'", key="preset", suggestion=matches[0] if matches else None)
    return preset.values


def list_presets() -> str:
    """Preset table: one line per preset with its description."""
    width = max(len(name) for name in PRESETS)
    return "\n".join(f"{p.name.ljust(width)}  {p.description}" for p in _PRESETS)
