"""
Per-run parameters: a flat `key = value unit` text format.

Values are stored in plain laboratory units (Hz, cm, cm^-3, cm^2) and
converted to internal units (angular frequency / gamma_rad) only when the
model objects are built.
"""
import dataclasses
import difflib
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Tuple

import numpy as np

from .config import Config
from .services.doppler import FWHM_TO_SIGMA, DopplerDistribution
from .services.model import (
    DEFAULT_GAMMA_DEPH_HZ,
    DEFAULT_GAMMA_RAD_HZ,
    DEFAULT_GAMMA_TRANSIT_HZ,
    AtomSystem,
    FieldSet,
    ModelKind,
)
from .services.spectroscopy import (
    DEFAULT_CROSS_SECTION_CM2,
    PROPAGATION_MODES,
    MediumSpec,
    SolverSettings,
    detuning_grid,
)

logger = logging.getLogger(__name__)

COMMANDS = ("spectrum", "comb", "eigenvalues", "dressed-compare")

UNITS: Dict[str, Dict[str, float]] = {
    "frequency": {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9},
    "length": {"cm": 1.0, "mm": 0.1, "m": 100.0},
    "density": {"cm^-3": 1.0, "m^-3": 1e-6},
    "area": {"cm^2": 1.0, "m^2": 1e4},
}
# unit written back when echoing a resolved config
CANONICAL_UNIT = {"frequency": "Hz", "length": "cm", "density": "cm^-3", "area": "cm^2"}

REQUIRED_KEYS: Dict[str, Tuple[str, ...]] = {
    "spectrum": ("omega_drive",),
    "comb": ("omega_drive", "nu_rf"),
    "eigenvalues": ("omega_drive",),
    "dressed-compare": ("omega_drive", "nu_rf"),
}


class ConfigError(ValueError):
    """Invalid run configuration; names the offending key and a close match when there is one."""

    def __init__(self, message: str, key: Optional[str] = None, suggestion: Optional[str] = None):
        if suggestion:
            message = f"{message} (did you mean '{suggestion}'?)"
        super().__init__(message)
        self.key = key
        self.suggestion = suggestion


def _key(kind: str, default: Any = None, choices: Tuple[str, ...] = ()) -> Any:
    return field(default=default, metadata={"kind": kind, "choices": choices})


@dataclass(frozen=True)
class RunConfig:
    command: str = _key("choice", "spectrum", COMMANDS)
    preset: Optional[str] = _key("name")
    model: str = _key("choice", ModelKind.PERIODIC.value, tuple(k.value for k in ModelKind))

    # Atom
    gamma_rad: float = _key("frequency", DEFAULT_GAMMA_RAD_HZ)
    branching_b: float = _key("number", 1.0 / 3.0)
    branching_c: float = _key("number", 1.0 / 3.0)
    branching_d: float = _key("number", 1.0 / 3.0)
    gamma_transit: float = _key("frequency", DEFAULT_GAMMA_TRANSIT_HZ)
    gamma_deph: float = _key("frequency", DEFAULT_GAMMA_DEPH_HZ)

    # Fields
    omega_drive: Optional[float] = _key("frequency")
    alpha_probe: float = _key("frequency", 1e3)
    omega_rf: float = _key("frequency", 0.0)
    nu_rf: Optional[float] = _key("frequency")
    delta_drive: float = _key("frequency", 0.0)
    omega_static: float = _key("frequency", 0.0)
    zeeman_shift: float = _key("frequency", 0.0)

    # Doppler averaging; zero FWHM disables it
    doppler_fwhm: float = _key("frequency", 0.0)
    doppler_order: int = _key("integer", 16)
    doppler_tol: Optional[float] = _key("number")
    doppler_atol: Optional[float] = _key("number")
    doppler_patch_halfwidth: float = _key("frequency", 0.0)
    doppler_patch_step: float = _key("frequency", 1.25e6)

    # Medium
    optical_depth: Optional[float] = _key("number")
    length: float = _key("length", 4.0)
    density: float = _key("density", 0.0)
    cross_section: float = _key("area", DEFAULT_CROSS_SECTION_CM2)
    transition_strength: float = _key("number", 1.0)
    propagation: str = _key("choice", "averaged", PROPAGATION_MODES)

    # Detuning grid and solver
    grid_span: Optional[float] = _key("frequency")
    grid_points: int = _key("integer", 2001)
    grid_refine_step: float = _key("frequency", 2e3)
    sidebands: int = _key("integer", 4)
    harmonics: int = _key("integer", 0)
    harmonic_tol: float = _key("number", 1e-10)
    max_harmonics: int = _key("integer", 32)
    check_linearity: bool = _key("boolean", False)
    strict_lines: bool = _key("boolean", False)

    # Eigenvalue scan and dressed comparison
    doppler_span: float = _key("frequency", 50e6)
    doppler_points: int = _key("integer", 1001)
    compare_min_ratio: float = _key("number", 1e-3)
    compare_max_ratio: float = _key("number", 1e-1)
    compare_points: int = _key("integer", 9)

    # Output
    analyzer_bandwidth: float = _key("frequency", 0.0)
    output_dir: Optional[str] = _key("name")

    @classmethod
    def keys(cls) -> Tuple[str, ...]:
        return tuple(f.name for f in dataclasses.fields(cls))

    @classmethod
    def kind_of(cls, key: str) -> dataclasses.Field:
        for f in dataclasses.fields(cls):
            if f.name == key:
                return f
        raise ConfigError(f"unknown key '{key}'", key=key, suggestion=suggest_key(key))

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def validate(self) -> "RunConfig":
        missing = [k for k in REQUIRED_KEYS[self.command] if getattr(self, k) is None]
        if missing:
            raise ConfigError(f"'{self.command}' needs {', '.join(missing)}", key=missing[0])
        if self.grid_points < 3:
            raise ConfigError("grid_points must be at least 3", key="grid_points")
        if self.sidebands < 0:
            raise ConfigError("sidebands cannot be negative", key="sidebands")
        if self.harmonics < 0:
            raise ConfigError("harmonics cannot be negative (0 selects the truncation adaptively)", key="harmonics")
        if self.gamma_rad <= 0:
            raise ConfigError("gamma_rad must be positive", key="gamma_rad")
        if self.doppler_points < 2:
            raise ConfigError("doppler_points must be at least 2", key="doppler_points")
        if not 0 < self.compare_min_ratio < self.compare_max_ratio:
            raise ConfigError("need 0 < compare_min_ratio < compare_max_ratio", key="compare_min_ratio")
        return self

    # --- conversion to model objects ---

    def internal(self, hz: float) -> float:
        """Frequency in Hz as angular frequency in units of gamma_rad."""
        return hz / self.gamma_rad

    def atom_system(self) -> AtomSystem:
        return AtomSystem(
            kind=ModelKind(self.model),
            gamma_rad=1.0,
            branching=(self.branching_b, self.branching_c, self.branching_d),
            gamma_transit=self.internal(self.gamma_transit),
            gamma_deph=self.internal(self.gamma_deph),
        )

    def field_set(self) -> FieldSet:
        return FieldSet(
            omega_drive=self.internal(self.omega_drive or 0.0),
            alpha_probe=self.internal(self.alpha_probe),
            omega_rf=self.internal(self.omega_rf),
            nu_rf=self.internal(self.nu_rf or 0.0),
            delta_drive=self.internal(self.delta_drive),
            omega_static=self.internal(self.omega_static),
            zeeman_shift=self.internal(self.zeeman_shift),
        )

    def medium(self) -> MediumSpec:
        if self.optical_depth is not None:
            return MediumSpec(length_cm=self.length, optical_depth_override=self.optical_depth)
        if self.density > 0:
            return MediumSpec(
                length_cm=self.length,
                density_cm3=self.density,
                cross_section_cm2=self.cross_section,
                strength=self.transition_strength,
            )
        return MediumSpec(length_cm=self.length, optical_depth_override=1.0)

    def doppler(self) -> Optional[DopplerDistribution]:
        if self.doppler_fwhm == 0:
            return None
        width = self.internal(self.doppler_fwhm)
        sigma = width * FWHM_TO_SIGMA
        halfwidth = self.internal(self.doppler_patch_halfwidth)
        if halfwidth == 0:
            halfwidth = max(20.0 * self.internal(self.omega_drive or 0.0), 3.0 * sigma)
        return DopplerDistribution(
            width_fwhm=width,
            order=self.doppler_order,
            tol=Config.DOPPLER_TOL if self.doppler_tol is None else self.doppler_tol,
            atol=Config.DOPPLER_ATOL if self.doppler_atol is None else self.doppler_atol,
            patch_halfwidth=halfwidth,
            patch_step=self.internal(self.doppler_patch_step),
        )

    def solver_settings(self, threads: Optional[int] = None) -> SolverSettings:
        return SolverSettings(
            truncation=self.harmonics or None,
            tol=self.harmonic_tol,
            max_harmonics=self.max_harmonics,
            threads=threads,
        )

    def detuning_grid(self) -> np.ndarray:
        """Two-photon detuning grid in internal units; comb runs keep nu_rf a multiple of the step."""
        comb = self.command == "comb"
        return detuning_grid(
            self.field_set(),
            self.grid_points,
            span=self.internal(self.grid_span) if self.grid_span else None,
            refine_step=None if comb or not self.grid_refine_step else self.internal(self.grid_refine_step),
            align=comb,
        )

    def doppler_grid(self) -> np.ndarray:
        span = self.internal(self.doppler_span)
        return np.linspace(-span, span, self.doppler_points)

    # --- echo ---

    def to_lines(self) -> List[str]:
        """Resolved parameters, one `key = value unit` line each, in a form parse_text reads back."""
        lines = []
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if value is None:
                continue
            kind = f.metadata["kind"]
            if kind in CANONICAL_UNIT:
                lines.append(f"{f.name} = {float(value)!r} {CANONICAL_UNIT[kind]}")
            elif kind == "boolean":
                lines.append(f"{f.name} = {'true' if value else 'false'}")
            elif kind == "number":
                lines.append(f"{f.name} = {float(value)!r}")
            else:
                lines.append(f"{f.name} = {value}")
        return lines


def suggest_key(key: str) -> Optional[str]:
    matches = difflib.get_close_matches(key, RunConfig.keys(), n=1)
    return matches[0] if matches else None


def parse_value(key: str, raw: str) -> Any:
    """Convert one raw value to the stored unit of its key."""
    f = RunConfig.kind_of(key)
    kind = f.metadata["kind"]
    text = raw.strip()
    if not text:
        raise ConfigError(f"'{key}' has no value", key=key)

    if kind in UNITS:
        parts = text.split()
        if len(parts) != 2:
            allowed = ", ".join(UNITS[kind])
            raise ConfigError(f"'{key}' needs a number and a unit ({allowed}), got '{text}'", key=key)
        number, unit = parts
        factor = UNITS[kind].get(unit.lower())
        if factor is None:
            raise ConfigError(f"unknown unit '{unit}' for '{key}'", key=key)
        return _to_float(key, number) * factor
    if kind == "number":
        return _to_float(key, text)
    if kind == "integer":
        try:
            return int(text)
        except ValueError:
            raise ConfigError(f"'{key}' must be an integer, got '{text}'", key=key) from None
    if kind == "boolean":
        lowered = text.lower()
        if lowered in ("true", "yes", "on", "1"):
            return True
        if lowered in ("false", "no", "off", "0"):
            return False
        raise ConfigError(f"'{key}' must be true or false, got '{text}'", key=key)
    if kind == "choice":
        if text not in f.metadata["choices"]:
            raise ConfigError(
                f"'{key}' must be one of {', '.join(f.metadata['choices'])}, got '{text}'",
                key=key,
                suggestion=next(iter(difflib.get_close_matches(text, f.metadata["choices"], n=1)), None),
            )
        return text
    return text


def _to_float(key: str, text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(f"'{key}' must be a number, got '{text}'", key=key) from None
    if not math.isfinite(value):
        raise ConfigError(f"'{key}' must be finite, got '{text}'", key=key)
    return value


def parse_text(text: str, source: str = "<config>") -> Dict[str, Any]:
    """Parse config text into stored values; later files or overrides are merged by the caller."""
    values: Dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        content = line.split("#", 1)[0].strip()
        if not content:
            continue
        if "=" not in content:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got '{content}'")
        key, raw = (part.strip() for part in content.split("=", 1))
        if key not in RunConfig.keys():
            raise ConfigError(f"{source}:{lineno}: unknown key '{key}'", key=key, suggestion=suggest_key(key))
        if key in values:
            raise ConfigError(f"{source}:{lineno}: '{key}' is set twice", key=key)
        values[key] = parse_value(key, raw)
    return values


def build_run_config(
    layers: Iterable[Mapping[str, Any]], preset_lookup=None
) -> RunConfig:
    """Merge value layers in order; a 'preset' key seeds the run with that preset before the layer applies."""
    merged: Dict[str, Any] = {}
    for layer in layers:
        if "preset" in layer and preset_lookup is not None:
            merged.update(preset_lookup(layer["preset"]))
        merged.update(layer)
    return RunConfig(**merged).validate()


def load_run_config(
    path: Optional[str] = None,
    preset: Optional[str] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> RunConfig:
    """Resolve a run: preset (if any), then the config file, then command-line overrides."""
    from .presets import preset_values

    layers: List[Mapping[str, Any]] = []
    if preset:
        layers.append({"preset": preset})
    if path:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        layers.append(parse_text(text, source=path))
    if overrides:
        layers.append({k: v for k, v in overrides.items() if v is not None})
    config = build_run_config(layers, preset_lookup=preset_values)
    logger.info("Resolved run: command=%s preset=%s model=%s", config.command, config.preset, config.model)
    return config
