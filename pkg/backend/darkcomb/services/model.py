"""
Level scheme, field parameters, Hamiltonians and the Lindblad generator.

All frequencies are angular frequencies in units of the radiative decay rate
of |a>. Levels are ordered a, b, c, d (periodic and single-perturber models)
or a, b, c, d1, d2 (split static model). Density operators are vectorized
row-major, so vec(A rho B) = kron(A, B.T) vec(rho).
"""
import dataclasses
import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Dict, Sequence, Tuple, Union

import numpy as np

logger = logging.getLogger(__name__)

# Default rates in Hz, converted to internal units on use
DEFAULT_GAMMA_RAD_HZ = 5.0e6
DEFAULT_GAMMA_TRANSIT_HZ = 5.0e3
GROUND_DECOHERENCE_HZ = 20.0e3
# Lindblad transit among three equally weighted ground states damps
# ground coherences at 2/3 of the transit rate; dephasing fills the rest.
DEFAULT_GAMMA_DEPH_HZ = GROUND_DECOHERENCE_HZ - (2.0 / 3.0) * DEFAULT_GAMMA_TRANSIT_HZ

LINEAR_RESPONSE_GUARD = 0.1


class ModelError(ValueError):
    """Invalid level scheme, field set or operator dimensions."""


class ModelKind(str, Enum):
    PERIODIC = "periodic"
    SPLIT = "split"
    SINGLE = "single"


_LEVELS: Dict[ModelKind, Tuple[str, ...]] = {
    ModelKind.PERIODIC: ("a", "b", "c", "d"),
    ModelKind.SPLIT: ("a", "b", "c", "d1", "d2"),
    ModelKind.SINGLE: ("a", "b", "c", "d"),
}


@dataclass(frozen=True)
class AtomSystem:
    """Level scheme with radiative decay, transit relaxation and ground dephasing."""

    kind: ModelKind = ModelKind.PERIODIC
    gamma_rad: float = 1.0
    # fractions of gamma_rad decaying into b, c, d
    branching: Tuple[float, float, float] = (1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)
    gamma_transit: float = DEFAULT_GAMMA_TRANSIT_HZ / DEFAULT_GAMMA_RAD_HZ
    gamma_deph: float = DEFAULT_GAMMA_DEPH_HZ / DEFAULT_GAMMA_RAD_HZ

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", ModelKind(self.kind))
        object.__setattr__(self, "branching", tuple(float(b) for b in self.branching))
        if len(self.branching) != 3:
            raise ModelError(f"branching needs three fractions (b, c, d), got {len(self.branching)}")
        if any(b < 0 for b in self.branching):
            raise ModelError(f"branching fractions must be non-negative: {self.branching}")
        if abs(sum(self.branching) - 1.0) > 1e-12:
            raise ModelError(f"branching fractions must sum to 1, got {sum(self.branching)!r}")
        for name in ("gamma_rad", "gamma_transit", "gamma_deph"):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ModelError(f"{name} must be a finite non-negative rate, got {value!r}")

    @property
    def levels(self) -> Tuple[str, ...]:
        return _LEVELS[self.kind]

    @property
    def dim(self) -> int:
        return len(self.levels)

    @property
    def ground(self) -> Tuple[str, ...]:
        return self.levels[1:]

    def index(self, label: str) -> int:
        try:
            return self.levels.index(label)
        except ValueError:
            raise ModelError(f"level '{label}' is not part of the {self.kind.value} model {self.levels}") from None

    def ground_weights(self) -> Dict[str, float]:
        """Weight of each ground level in the transit target and decay branching.

        In the split model d1 and d2 share the weight of d.
        """
        b, c, d = self.branching
        if self.kind is ModelKind.SPLIT:
            return {"b": b, "c": c, "d1": d / 2.0, "d2": d / 2.0}
        return {"b": b, "c": c, "d": d}

    def transit_weights(self) -> Dict[str, float]:
        if self.kind is ModelKind.SPLIT:
            return {"b": 1.0 / 3.0, "c": 1.0 / 3.0, "d1": 1.0 / 6.0, "d2": 1.0 / 6.0}
        return {label: 1.0 / 3.0 for label in self.ground}


@dataclass(frozen=True)
class FieldSet:
    """Rabi frequencies and detunings of drive, probe and RF fields.

    Only magnitudes of Rabi frequencies are modeled; the RF phase is zero.
    """

    omega_drive: float = 0.0
    alpha_probe: float = 0.0
    omega_rf: float = 0.0
    nu_rf: float = 0.0
    delta_drive: float = 0.0
    delta_probe: float = 0.0
    doppler_shift: float = 0.0
    # residual static c<->d mixing and Zeeman shift of d, both off by default
    omega_static: float = 0.0
    zeeman_shift: float = 0.0

    def __post_init__(self) -> None:
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if not math.isfinite(value):
                raise ModelError(f"{f.name} must be finite, got {value!r}")
        for name in ("omega_drive", "alpha_probe", "omega_rf", "omega_static"):
            if getattr(self, name) < 0:
                raise ModelError(f"{name} is a Rabi magnitude and cannot be negative")
        if self.nu_rf < 0:
            raise ModelError("nu_rf cannot be negative")

    @property
    def two_photon_detuning(self) -> float:
        # copropagating beams: the Doppler shift cancels
        return self.delta_probe - self.delta_drive

    @property
    def probe_detuning(self) -> float:
        return self.delta_probe + self.doppler_shift

    @property
    def drive_detuning(self) -> float:
        return self.delta_drive + self.doppler_shift

    def replace(self, **changes) -> "FieldSet":
        return dataclasses.replace(self, **changes)

    def in_linear_regime(self) -> bool:
        """False (with a warning) when the probe is too strong for linear response."""
        if self.alpha_probe > LINEAR_RESPONSE_GUARD * self.omega_drive:
            logger.warning(
                "Probe Rabi frequency %.3g exceeds %.1f x drive %.3g; linear response is not guaranteed",
                self.alpha_probe, LINEAR_RESPONSE_GUARD, self.omega_drive,
            )
            return False
        return True


@dataclass(frozen=True)
class OperatorMatrix:
    """Square complex operator over a labeled level basis."""

    entries: np.ndarray
    labels: Tuple[str, ...]

    def __post_init__(self) -> None:
        entries = np.asarray(self.entries, dtype=complex)
        if entries.shape != (len(self.labels), len(self.labels)):
            raise ModelError(f"operator shape {entries.shape} does not match {len(self.labels)} levels")
        entries.setflags(write=False)
        object.__setattr__(self, "entries", entries)

    @property
    def dim(self) -> int:
        return len(self.labels)

    def element(self, row: str, col: str) -> complex:
        return complex(self.entries[self.labels.index(row), self.labels.index(col)])

    def dagger(self) -> "OperatorMatrix":
        return OperatorMatrix(self.entries.conj().T, self.labels)

    def is_hermitian(self, rtol: float = 1e-12) -> bool:
        scale = max(float(np.max(np.abs(self.entries))), 1.0)
        return bool(np.max(np.abs(self.entries - self.entries.conj().T)) <= rtol * scale)


@dataclass(frozen=True)
class LiouvillianHarmonics:
    """Fourier components of the generator: L(t) = L_0 + L_plus1 e^{-i nu t} + L_minus1 e^{+i nu t}.

    L_0 may carry leading batch dimensions (one generator per detuning point);
    the RF harmonics never depend on detunings and stay unbatched.
    """

    L_minus1: np.ndarray
    L_0: np.ndarray
    L_plus1: np.ndarray

    def __post_init__(self) -> None:
        size = self.L_0.shape[-1]
        if self.L_0.shape[-2] != size:
            raise ModelError(f"L_0 must be square, got shape {self.L_0.shape}")
        for name in ("L_minus1", "L_plus1"):
            if getattr(self, name).shape != (size, size):
                raise ModelError(f"{name} shape {getattr(self, name).shape} does not match L_0 ({size}x{size})")
        dim = math.isqrt(size)
        if dim * dim != size:
            raise ModelError(f"superoperator size {size} is not a square of a level count")

    @property
    def dim(self) -> int:
        return math.isqrt(self.L_0.shape[-1])

    @property
    def batch_shape(self) -> Tuple[int, ...]:
        return self.L_0.shape[:-2]

    @property
    def is_periodic(self) -> bool:
        return bool(np.any(self.L_plus1) or np.any(self.L_minus1))


def _projector(dim: int, i: int, j: int) -> np.ndarray:
    op = np.zeros((dim, dim), dtype=complex)
    op[i, j] = 1.0
    return op


def commutator_superoperator(H: np.ndarray) -> np.ndarray:
    """Superoperator of rho -> -i[H, rho]."""
    dim = H.shape[-1]
    eye = np.eye(dim)
    return -1j * (np.kron(H, eye) - np.kron(eye, H.T))


def dissipator_superoperator(jump: np.ndarray, rate: float) -> np.ndarray:
    """Superoperator of rate * (J rho J^dag - {J^dag J, rho}/2)."""
    dim = jump.shape[-1]
    eye = np.eye(dim)
    jdj = jump.conj().T @ jump
    return rate * (np.kron(jump, jump.conj()) - 0.5 * np.kron(jdj, eye) - 0.5 * np.kron(eye, jdj.T))


@lru_cache(maxsize=32)
def _dissipator(sys: AtomSystem) -> np.ndarray:
    dim = sys.dim
    a = sys.index("a")
    D = np.zeros((dim * dim, dim * dim), dtype=complex)

    for label, weight in sys.ground_weights().items():
        if weight > 0 and sys.gamma_rad > 0:
            D += dissipator_superoperator(_projector(dim, sys.index(label), a), sys.gamma_rad * weight)

    if sys.gamma_transit > 0:
        targets = sys.transit_weights()
        for target, weight in targets.items():
            for source in sys.ground:
                if source == target:
                    continue
                jump = _projector(dim, sys.index(target), sys.index(source))
                D += dissipator_superoperator(jump, sys.gamma_transit * weight)

    if sys.gamma_deph > 0:
        for label in sys.ground:
            i = sys.index(label)
            D += dissipator_superoperator(_projector(dim, i, i), sys.gamma_deph)

    D.setflags(write=False)
    return D


def dissipator(sys: AtomSystem) -> np.ndarray:
    """Radiative decay, transit relaxation and ground dephasing as one superoperator."""
    return _dissipator(sys)


def _check_kind(sys: AtomSystem, allowed: Sequence[ModelKind], op: str) -> None:
    if sys.kind not in allowed:
        names = ", ".join(k.value for k in allowed)
        raise ModelError(f"{op} needs a {names} model, got {sys.kind.value}")


def build_static_hamiltonian(sys: AtomSystem, fields: FieldSet) -> OperatorMatrix:
    """Time-independent Hamiltonian of the split (a, b, c, d1, d2) or single-perturber model.

    Frame: b at zero, a at the probe one-photon detuning, c at the two-photon
    detuning. In the split model d1/d2 sit at +/-nu_rf from c and each couple
    to c with omega_rf/2; the single-perturber d sits at -nu_rf from c and
    couples with the full omega_rf.
    """
    _check_kind(sys, (ModelKind.SPLIT, ModelKind.SINGLE), "build_static_hamiltonian")
    dim = sys.dim
    H = np.zeros((dim, dim), dtype=complex)
    a, b, c = sys.index("a"), sys.index("b"), sys.index("c")
    delta = fields.two_photon_detuning

    H[a, a] = fields.probe_detuning
    H[c, c] = delta
    H[a, b] = H[b, a] = fields.alpha_probe
    H[a, c] = H[c, a] = fields.omega_drive

    if sys.kind is ModelKind.SPLIT:
        for label, sign in (("d1", 1.0), ("d2", -1.0)):
            d = sys.index(label)
            H[d, d] = delta + sign * fields.nu_rf + fields.zeeman_shift
            H[c, d] = H[d, c] = 0.5 * fields.omega_rf
    else:
        d = sys.index("d")
        H[d, d] = delta - fields.nu_rf + fields.zeeman_shift
        H[c, d] = H[d, c] = fields.omega_rf

    return OperatorMatrix(H, sys.levels)


def build_periodic_hamiltonian(
    sys: AtomSystem, fields: FieldSet
) -> Tuple[OperatorMatrix, OperatorMatrix, OperatorMatrix]:
    """(H_minus1, H_0, H_plus1) of the 4-level model with a cosine RF drive on c<->d."""
    _check_kind(sys, (ModelKind.PERIODIC,), "build_periodic_hamiltonian")
    dim = sys.dim
    a, b, c, d = (sys.index(label) for label in ("a", "b", "c", "d"))

    H0 = np.zeros((dim, dim), dtype=complex)
    H0[a, a] = fields.probe_detuning
    H0[c, c] = fields.two_photon_detuning
    H0[d, d] = fields.two_photon_detuning + fields.zeeman_shift
    H0[a, b] = H0[b, a] = fields.alpha_probe
    H0[a, c] = H0[c, a] = fields.omega_drive
    H0[c, d] = H0[d, c] = fields.omega_static

    H_plus = np.zeros((dim, dim), dtype=complex)
    H_plus[c, d] = H_plus[d, c] = 0.5 * fields.omega_rf

    H_plus_op = OperatorMatrix(H_plus, sys.levels)
    return H_plus_op.dagger(), OperatorMatrix(H0, sys.levels), H_plus_op


HamiltonianInput = Union[OperatorMatrix, Tuple[OperatorMatrix, OperatorMatrix, OperatorMatrix]]


def build_liouvillian(H_harmonics: HamiltonianInput, sys: AtomSystem) -> LiouvillianHarmonics:
    """Lindblad generator harmonics for a static Hamiltonian or an (H_-1, H_0, H_+1) triple."""
    if isinstance(H_harmonics, OperatorMatrix):
        H_minus, H0, H_plus = None, H_harmonics, None
    else:
        H_minus, H0, H_plus = H_harmonics

    size = sys.dim * sys.dim
    for H in (H_minus, H0, H_plus):
        if H is not None and H.dim != sys.dim:
            raise ModelError(f"Hamiltonian has dimension {H.dim}, atom system has {sys.dim} levels")

    L0 = commutator_superoperator(H0.entries) + dissipator(sys)
    L_plus = commutator_superoperator(H_plus.entries) if H_plus is not None else np.zeros((size, size), dtype=complex)
    L_minus = commutator_superoperator(H_minus.entries) if H_minus is not None else np.zeros((size, size), dtype=complex)
    return LiouvillianHarmonics(L_minus1=L_minus, L_0=L0, L_plus1=L_plus)


def build_model_liouvillian(sys: AtomSystem, fields: FieldSet) -> LiouvillianHarmonics:
    """Generator for any model kind straight from a field set."""
    if sys.kind is ModelKind.PERIODIC:
        return build_liouvillian(build_periodic_hamiltonian(sys, fields), sys)
    return build_liouvillian(build_static_hamiltonian(sys, fields), sys)


def liouvillian_stack(
    sys: AtomSystem,
    fields: FieldSet,
    probe_detunings: np.ndarray,
    two_photon_detunings: np.ndarray,
) -> LiouvillianHarmonics:
    """Generators for many (probe detuning, two-photon detuning) pairs at once.

    The Hamiltonian is affine in both detunings, so each batch member is the
    zero-detuning generator plus two fixed commutator terms.
    """
    probe_detunings = np.asarray(probe_detunings, dtype=float)
    two_photon_detunings = np.asarray(two_photon_detunings, dtype=float)
    if probe_detunings.shape != two_photon_detunings.shape:
        raise ModelError("probe and two-photon detuning arrays must have the same shape")

    base = build_model_liouvillian(
        sys, fields.replace(delta_probe=0.0, delta_drive=0.0, doppler_shift=0.0)
    )
    dim = sys.dim
    P_a = _projector(dim, sys.index("a"), sys.index("a"))
    P_shifted = np.zeros((dim, dim), dtype=complex)
    for label in sys.ground:
        if label != "b":
            i = sys.index(label)
            P_shifted[i, i] = 1.0
    S_a = commutator_superoperator(P_a)
    S_g = commutator_superoperator(P_shifted)

    L0 = (
        base.L_0
        + probe_detunings[..., None, None] * S_a
        + two_photon_detunings[..., None, None] * S_g
    )
    return LiouvillianHarmonics(L_minus1=base.L_minus1, L_0=L0, L_plus1=base.L_plus1)


def trace_functional(dim: int) -> np.ndarray:
    """Row vector t with t @ vec(rho) = Tr(rho)."""
    t = np.zeros(dim * dim, dtype=complex)
    t[:: dim + 1] = 1.0
    return t


def vec(rho: np.ndarray) -> np.ndarray:
    return np.asarray(rho).reshape(*np.shape(rho)[:-2], -1)


def unvec(x: np.ndarray, dim: int) -> np.ndarray:
    return np.asarray(x).reshape(*np.shape(x)[:-1], dim, dim)
