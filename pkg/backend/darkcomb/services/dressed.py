"""
Dressed-state analysis of the probe-free Hamiltonian on {a, c, d1, d2}.

Exact diagonalization, the first-order dressed states for a weak RF
coupling, and continuity-tracked eigenvalue curves versus Doppler shift.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from ..config import Config
from .model import AtomSystem, FieldSet, ModelKind, build_static_hamiltonian

logger = logging.getLogger(__name__)

BASIS: Tuple[str, ...] = ("a", "c", "d1", "d2")
LABELS: Tuple[str, ...] = ("+", "-", "0+", "0-")
DEGENERACY_GAP = 1e-12
AMBIGUOUS_OVERLAP = 0.5

_SPLIT = AtomSystem(kind=ModelKind.SPLIT)


class GuardBandError(ValueError):
    """Perturbative dressed states requested too close to Omega = Delta_RF."""


@dataclass(frozen=True)
class DressedSpectrum:
    """Eigenvalues and eigenvectors (columns, over BASIS) ordered as LABELS."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    labels: Tuple[str, ...] = LABELS
    degenerate: bool = False

    def eigenvalue(self, label: str) -> float:
        return float(self.eigenvalues[self.labels.index(label)])

    def eigenvector(self, label: str) -> np.ndarray:
        return self.eigenvectors[:, self.labels.index(label)]


@dataclass
class EigenScan:
    doppler_grid: np.ndarray
    curves: np.ndarray
    bare: np.ndarray
    stark: np.ndarray
    min_overlap: np.ndarray
    flagged: List[int] = field(default_factory=list)
    gaps: Dict[str, float] = field(default_factory=dict)


def dressed_hamiltonian(omega_drive: float, omega_rf: float, delta_rf: float, doppler_shift: float = 0.0) -> np.ndarray:
    """Split-model Hamiltonian at zero detunings restricted to {a, c, d1, d2}."""
    fields = FieldSet(
        omega_drive=omega_drive, omega_rf=omega_rf, nu_rf=delta_rf, doppler_shift=doppler_shift
    )
    H = build_static_hamiltonian(_SPLIT, fields).entries
    keep = [_SPLIT.index(label) for label in BASIS]
    return H[np.ix_(keep, keep)].real.copy()


def _reference_vectors() -> np.ndarray:
    """Bare dressed basis: (a+c)/sqrt2, (a-c)/sqrt2, d1, d2."""
    s = 1.0 / math.sqrt(2.0)
    return np.array([
        [s, s, 0.0, 0.0],
        [s, -s, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ])


def _match(reference: np.ndarray, vectors: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Column permutation of vectors maximizing |overlap| with reference columns, and those overlaps."""
    overlap = np.abs(reference.conj().T @ vectors)
    rows, cols = linear_sum_assignment(-overlap)
    order = cols[np.argsort(rows)]
    return order, overlap[np.arange(len(order)), order]


def _fix_phase(vectors: np.ndarray, reference: np.ndarray) -> np.ndarray:
    signs = np.sign(np.einsum("ij,ij->j", reference, vectors))
    signs[signs == 0] = 1.0
    return vectors * signs


def dressed_eigensystem(
    omega_drive: float, omega_rf: float, delta_rf: float, doppler_shift: float = 0.0
) -> DressedSpectrum:
    """Exact eigendecomposition, states labeled by best overlap with the bare dressed basis."""
    values = (omega_drive, omega_rf, delta_rf, doppler_shift)
    if not all(math.isfinite(v) for v in values):
        raise ValueError(f"dressed_eigensystem needs finite inputs, got {values}")
    eigenvalues, eigenvectors = np.linalg.eigh(dressed_hamiltonian(*values))
    gap = float(np.min(np.diff(eigenvalues)))
    degenerate = gap < DEGENERACY_GAP * max(abs(omega_drive), 1.0)
    if degenerate:
        logger.warning("Near-degenerate dressed eigenvalues (gap %.3e)", gap)

    reference = _reference_vectors()
    order, _ = _match(reference, eigenvectors)
    return DressedSpectrum(
        eigenvalues=eigenvalues[order],
        eigenvectors=_fix_phase(eigenvectors[:, order], reference),
        degenerate=degenerate,
    )


def perturbative_dressed(
    omega_drive: float, omega_rf: float, delta_rf: float, guard_band: Optional[float] = None
) -> DressedSpectrum:
    """First-order dressed states for omega_rf << omega_drive.

    |+-> = (|a> +- |c>)/sqrt2 at +-Omega, and
    |0+-> = |d1/d2> - (Omega_c/2Omega) f (|a> +- (Delta/Omega)|c>) at +-Delta,
    normalized, with f = Omega^2/(Omega^2 - Delta^2).
    """
    guard_band = Config.DRESSED_GUARD_BAND if guard_band is None else guard_band
    if abs(omega_drive - abs(delta_rf)) <= guard_band * abs(omega_drive):
        raise GuardBandError(
            f"Omega={omega_drive:.6g} and Delta_RF={delta_rf:.6g} are within the guard band "
            f"({guard_band:.1e} relative); the first-order states diverge there"
        )

    f = omega_drive ** 2 / (omega_drive ** 2 - delta_rf ** 2)
    admixture = 0.5 * omega_rf / omega_drive * f
    ratio = delta_rf / omega_drive
    s = 1.0 / math.sqrt(2.0)

    vectors = np.zeros((4, 4))
    vectors[:, 0] = [s, s, 0.0, 0.0]
    vectors[:, 1] = [s, -s, 0.0, 0.0]
    vectors[:, 2] = [-admixture, -admixture * ratio, 1.0, 0.0]
    vectors[:, 3] = [-admixture, admixture * ratio, 0.0, 1.0]
    vectors /= np.linalg.norm(vectors, axis=0)

    return DressedSpectrum(
        eigenvalues=np.array([omega_drive, -omega_drive, delta_rf, -delta_rf]),
        eigenvectors=vectors,
    )


def stark_pair(omega_drive: float, doppler_shift) -> np.ndarray:
    """Closed-form a/c eigenvalues without RF: D/2 +- sqrt(D^2/4 + Omega^2), shape (..., 2)."""
    d = np.asarray(doppler_shift, dtype=float)
    root = np.sqrt(0.25 * d ** 2 + omega_drive ** 2)
    return np.stack([0.5 * d + root, 0.5 * d - root], axis=-1)


def _gap_near(eigenvalues: np.ndarray, target: float) -> float:
    nearest = int(np.argmin(np.abs(eigenvalues - target)))
    others = np.delete(eigenvalues, nearest)
    return float(np.min(np.abs(others - eigenvalues[nearest])))


def eigenvalue_scan(
    omega_drive: float, omega_rf: float, delta_rf: float, doppler_grid: Sequence[float]
) -> EigenScan:
    """Eigenvalue curves versus Doppler shift, tracked by eigenvector overlap."""
    grid = np.asarray(doppler_grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2:
        raise ValueError("doppler grid needs at least two points")
    steps = np.diff(grid)
    if not (np.all(steps > 0) or np.all(steps < 0)):
        raise ValueError("doppler grid must be strictly monotone")

    n = grid.size
    curves = np.empty((n, 4))
    min_overlap = np.ones(n)
    flagged: List[int] = []

    first = dressed_eigensystem(omega_drive, omega_rf, delta_rf, grid[0])
    curves[0] = first.eigenvalues
    previous = first.eigenvectors
    for i in range(1, n):
        eigenvalues, eigenvectors = np.linalg.eigh(dressed_hamiltonian(omega_drive, omega_rf, delta_rf, grid[i]))
        order, overlaps = _match(previous, eigenvectors)
        curves[i] = eigenvalues[order]
        previous = _fix_phase(eigenvectors[:, order], previous)
        min_overlap[i] = float(np.min(overlaps))
        if min_overlap[i] < AMBIGUOUS_OVERLAP:
            flagged.append(i)

    if flagged:
        logger.warning("Eigenvalue tracking ambiguous at %d of %d grid points", len(flagged), n)

    bare = np.column_stack([grid, np.zeros(n), np.full(n, delta_rf), np.full(n, -delta_rf)])
    stark = stark_pair(omega_drive, grid)
    targets = {"0": 0.0, "+delta_rf": delta_rf, "-delta_rf": -delta_rf}
    gaps = {name: min(_gap_near(row, t) for row in curves) for name, t in targets.items()}
    logger.info("Eigenvalue scan over %d Doppler shifts; minimum gaps %s", n, gaps)

    return EigenScan(
        doppler_grid=grid,
        curves=curves,
        bare=bare,
        stark=stark,
        min_overlap=min_overlap,
        flagged=flagged,
        gaps=gaps,
    )


@dataclass
class DressedComparison:
    ratios: np.ndarray
    exact: np.ndarray
    perturbative: np.ndarray
    overlaps: np.ndarray
    slopes: Dict[str, float]

    @property
    def errors(self) -> np.ndarray:
        return np.abs(self.exact - self.perturbative)


def compare_dressed(omega_drive: float, delta_rf: float, ratios: Sequence[float]) -> DressedComparison:
    """Perturbative vs exact dressed states over omega_rf/omega_drive ratios.

    slopes holds, per label, the fitted slope of log eigenvalue error
    against log omega_rf.
    """
    ratios = np.asarray(ratios, dtype=float)
    if ratios.size < 2 or np.any(ratios <= 0):
        raise ValueError("need at least two positive omega_rf/omega_drive ratios")

    exact = np.empty((ratios.size, 4))
    approx = np.empty((ratios.size, 4))
    overlaps = np.empty((ratios.size, 4))
    for i, r in enumerate(ratios):
        ex = dressed_eigensystem(omega_drive, r * omega_drive, delta_rf)
        pt = perturbative_dressed(omega_drive, r * omega_drive, delta_rf)
        exact[i] = ex.eigenvalues
        approx[i] = pt.eigenvalues
        overlaps[i] = np.abs(np.einsum("ij,ij->j", ex.eigenvectors, pt.eigenvectors))

    errors = np.abs(exact - approx)
    slopes = {}
    for j, label in enumerate(LABELS):
        usable = errors[:, j] > 0
        if np.count_nonzero(usable) >= 2:
            slope, _ = np.polyfit(np.log(ratios[usable]), np.log(errors[usable, j]), 1)
            slopes[label] = float(slope)
    logger.info("Dressed comparison slopes: %s", slopes)
    return DressedComparison(ratios=ratios, exact=exact, perturbative=approx, overlaps=overlaps, slopes=slopes)
