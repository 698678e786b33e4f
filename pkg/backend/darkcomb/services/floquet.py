"""
Periodic steady state of the RF-driven Lindblad generator.

Harmonic convention: rho(t) = sum_n rho^(n) exp(-i n nu t) with
L(t) = L_0 + L_plus1 exp(-i nu t) + L_minus1 exp(+i nu t). Harmonic balance
couples each rho^(n) to its neighbours only, so the truncated system is
block tridiagonal in n.
"""
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp

from ..config import Config
from .block_tridiagonal import SingularSystemError, solve_block_tridiagonal
from .model import LiouvillianHarmonics, ModelError, trace_functional, unvec

logger = logging.getLogger(__name__)

__all__ = [
    "ConvergenceError",
    "HarmonicState",
    "NotSettledError",
    "SingularSystemError",
    "floquet_steady_state",
    "floquet_steady_state_auto",
    "static_steady_state",
    "time_domain_steady_state",
]


class ConvergenceError(RuntimeError):
    """Harmonic truncation reached its cap without converging."""


class NotSettledError(RuntimeError):
    """Time-domain trajectory had not reached its periodic attractor."""


@dataclass(frozen=True)
class HarmonicState:
    """Fourier components rho^(n), n = -N..N, of the periodic steady state.

    components has shape (..., 2N+1, dim, dim); leading axes are batch axes.
    """

    components: np.ndarray
    nu_rf: float
    truncation: int

    def __post_init__(self) -> None:
        if self.components.shape[-3] != 2 * self.truncation + 1:
            raise ModelError(
                f"expected {2 * self.truncation + 1} harmonics for truncation {self.truncation}, "
                f"got {self.components.shape[-3]}"
            )

    @property
    def dim(self) -> int:
        return self.components.shape[-1]

    @property
    def orders(self) -> np.ndarray:
        return np.arange(-self.truncation, self.truncation + 1)

    def harmonic(self, n: int) -> np.ndarray:
        if abs(n) > self.truncation:
            return np.zeros(self.components.shape[:-3] + (self.dim, self.dim), dtype=complex)
        return self.components[..., n + self.truncation, :, :]

    def coherence(self, i: int, j: int) -> np.ndarray:
        """rho_ij^(n) for all n, shape (..., 2N+1)."""
        return self.components[..., :, i, j]

    def norms(self) -> np.ndarray:
        """Largest entry magnitude of each harmonic, shape (..., 2N+1)."""
        return np.max(np.abs(self.components), axis=(-2, -1))

    def trace(self) -> np.ndarray:
        return np.trace(self.components, axis1=-2, axis2=-1)


def floquet_steady_state(L: LiouvillianHarmonics, nu_rf: float, N: int) -> HarmonicState:
    """Harmonic-balance steady state truncated at |n| <= N, normalized so Tr rho^(0) = 1."""
    if N < 0:
        raise ValueError(f"truncation must be non-negative, got {N}")
    if L.is_periodic and N < 1:
        raise ValueError("a periodically driven generator needs truncation N >= 1")
    if N > 0 and not nu_rf > 0:
        raise ValueError(f"nu_rf must be positive for N >= 1, got {nu_rf}")

    size = L.L_0.shape[-1]
    dim = L.dim
    nblocks = 2 * N + 1
    batch = L.batch_shape
    eye = np.eye(size)
    orders = np.arange(-N, N + 1)

    diag = np.empty(batch + (nblocks, size, size), dtype=complex)
    diag[...] = L.L_0[..., None, :, :]
    diag += (1j * nu_rf * orders)[:, None, None] * eye
    # rho^(n-1) enters row n through L_plus1, rho^(n+1) through L_minus1
    lower = np.broadcast_to(L.L_plus1, (nblocks, size, size)).copy()
    upper = np.broadcast_to(L.L_minus1, (nblocks, size, size)).copy()

    # Trace normalization replaces the rho_aa equation of the n = 0 block
    center = N
    diag[..., center, 0, :] = trace_functional(dim)
    lower[center, 0, :] = 0.0
    upper[center, 0, :] = 0.0
    rhs = np.zeros(batch + (nblocks, size), dtype=complex)
    rhs[..., center, 0] = 1.0

    x = solve_block_tridiagonal(lower, diag, upper, rhs)
    return HarmonicState(components=unvec(x, dim), nu_rf=nu_rf, truncation=N)


def floquet_steady_state_auto(
    L: LiouvillianHarmonics,
    nu_rf: float,
    tol: Optional[float] = None,
    max_harmonics: Optional[int] = None,
) -> HarmonicState:
    """Raise the truncation until the edge harmonics and rho^(0) stop changing by more than tol."""
    tol = Config.FLOQUET_TOL if tol is None else tol
    max_harmonics = Config.FLOQUET_MAX_HARMONICS if max_harmonics is None else max_harmonics
    if not tol > 0:
        raise ValueError(f"tol must be positive, got {tol}")

    if not L.is_periodic:
        return floquet_steady_state(L, nu_rf, 1)

    previous: Optional[HarmonicState] = None
    edge = change = math.inf
    for N in range(1, max_harmonics + 1):
        state = floquet_steady_state(L, nu_rf, N)
        edge = float(np.max(state.norms()[..., [0, -1]]))
        if previous is not None:
            change = float(np.max(np.abs(state.harmonic(0) - previous.harmonic(0))))
            if edge < tol and change < tol:
                logger.info("Floquet truncation converged at N=%d (edge %.2e, change %.2e)", N, edge, change)
                return state
        previous = state

    raise ConvergenceError(
        f"harmonic truncation did not converge within N={max_harmonics} "
        f"(edge harmonic {edge:.3e}, last change {change:.3e}, tol {tol:.1e})"
    )


def static_steady_state(L: LiouvillianHarmonics) -> np.ndarray:
    """Unique steady state of a time-independent generator, shape (..., dim, dim)."""
    if L.is_periodic:
        raise ModelError("static_steady_state needs a generator without RF harmonics")
    return floquet_steady_state(L, 0.0, 0).harmonic(0)


def _slowest_and_fastest_rates(L: LiouvillianHarmonics, nu_rf: float):
    eigenvalues = np.linalg.eigvals(L.L_0)
    scale = max(float(np.max(np.abs(eigenvalues))), 1.0)
    decay = -eigenvalues.real
    decay = decay[decay > 1e-9 * scale]
    if decay.size == 0:
        raise SingularSystemError("generator has no decaying modes; time-domain steady state is undefined")
    drive = float(np.max(np.abs(L.L_plus1))) if L.is_periodic else 0.0
    fastest = max(float(np.max(np.abs(eigenvalues.imag))), nu_rf, drive, 1e-12)
    return float(np.min(decay)), fastest


def time_domain_steady_state(
    L: LiouvillianHarmonics,
    nu_rf: float,
    horizon: Optional[float] = None,
    dt: Optional[float] = None,
    N: int = 4,
    settle_tol: float = 1e-7,
    samples_per_period: int = 128,
) -> HarmonicState:
    """Integrate the master equation from the maximally mixed state and Fourier-analyze the last period.

    The horizon defaults to 25 slowest decay times rounded up to whole RF
    periods; the step is capped at 1/20 of the fastest period.
    """
    if L.batch_shape:
        raise ModelError("time-domain integration handles one generator at a time")
    if not nu_rf > 0:
        raise ValueError(f"nu_rf must be positive, got {nu_rf}")

    dim = L.dim
    period = 2.0 * math.pi / nu_rf
    slowest, fastest = _slowest_and_fastest_rates(L, nu_rf)
    if horizon is None:
        horizon = 25.0 / slowest
    elif horizon < 10.0 / slowest:
        logger.warning("Horizon %.3g covers fewer than 10 slowest decay times (%.3g)", horizon, 1.0 / slowest)
    periods = max(math.ceil(horizon / period), 2)
    horizon = periods * period
    max_step = dt if dt is not None else (2.0 * math.pi / fastest) / 20.0

    L0, Lp, Lm = L.L_0, L.L_plus1, L.L_minus1

    def rhs(t, y):
        return L0 @ y + np.exp(-1j * nu_rf * t) * (Lp @ y) + np.exp(1j * nu_rf * t) * (Lm @ y)

    samples = max(samples_per_period, 4 * N + 8)
    t_eval = horizon - 2.0 * period + np.arange(2 * samples) * (period / samples)
    y0 = (np.eye(dim, dtype=complex) / dim).reshape(-1)

    logger.info("Integrating %d RF periods (max_step %.3g)", periods, max_step)
    sol = solve_ivp(
        rhs, (0.0, horizon), y0, method="DOP853", t_eval=t_eval,
        max_step=max_step, rtol=1e-10, atol=1e-12,
    )
    if not sol.success:
        raise NotSettledError(f"time integration failed: {sol.message}")

    orders = np.arange(-N, N + 1)
    rho_t = unvec(sol.y.T, dim)
    phases = np.exp(1j * nu_rf * np.outer(orders, sol.t))

    def _project(window: slice) -> np.ndarray:
        return np.einsum("nk,kij->nij", phases[:, window], rho_t[window]) / samples

    first = _project(slice(0, samples))
    last = _project(slice(samples, 2 * samples))
    drift = float(np.max(np.abs(last - first)))
    if drift > settle_tol:
        raise NotSettledError(
            f"harmonics changed by {drift:.3e} over the final period (tolerance {settle_tol:.1e}); extend the horizon"
        )
    return HarmonicState(components=last, nu_rf=nu_rf, truncation=N)
