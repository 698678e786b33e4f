"""
Gaussian velocity averaging of per-velocity-class responses.

The average is split by a smooth window W centred on zero Doppler shift:
a dense trapezoid patch integrates f*W*G, where narrow dark-resonance
structure lives, and adaptive Gauss-Hermite quadrature integrates the smooth
remainder f*(1-W)*G. Without a patch the whole integral is Gauss-Hermite.
"""
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional, Tuple

import numpy as np
from scipy.special import roots_hermite

from ..config import Config
from .parallel import map_chunks

logger = logging.getLogger(__name__)

FWHM_TO_SIGMA = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))
# Fraction of the patch half-width over which the window tapers to zero
PATCH_TAPER = 0.5

Sampler = Callable[[np.ndarray], np.ndarray]


class QuadratureError(RuntimeError):
    """Gauss-Hermite order cap reached before the average converged."""


@dataclass(frozen=True)
class DopplerDistribution:
    """Gaussian distribution of Doppler shifts, configured by its FWHM."""

    width_fwhm: float
    order: int = 16
    tol: float = field(default_factory=lambda: Config.DOPPLER_TOL)
    atol: float = field(default_factory=lambda: Config.DOPPLER_ATOL)
    max_order: int = field(default_factory=lambda: Config.DOPPLER_MAX_ORDER)
    patch_halfwidth: float = 0.0
    patch_step: float = 0.25

    def __post_init__(self) -> None:
        if not self.width_fwhm > 0:
            raise ValueError(f"Doppler FWHM must be positive, got {self.width_fwhm}")
        if self.tol < 0 or self.atol < 0:
            raise ValueError("quadrature tolerances must be non-negative")
        if self.order < 2:
            raise ValueError(f"quadrature order must be at least 2, got {self.order}")
        if self.patch_halfwidth < 0 or not self.patch_step > 0:
            raise ValueError("patch half-width must be >= 0 and patch step > 0")

    @property
    def sigma(self) -> float:
        return self.width_fwhm * FWHM_TO_SIGMA

    def density(self, shifts: np.ndarray) -> np.ndarray:
        s = self.sigma
        return np.exp(-0.5 * (np.asarray(shifts) / s) ** 2) / (math.sqrt(2.0 * math.pi) * s)

    def nodes(self, order: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
        """Doppler shifts and weights of the order-n rule; weights sum to 1."""
        x, w = _hermite_rule(self.order if order is None else order)
        return math.sqrt(2.0) * self.sigma * x, w / math.sqrt(math.pi)

    def window(self, shifts: np.ndarray) -> np.ndarray:
        """Smooth bump: 1 on the inner patch, 0 outside the patch, C-infinity in between."""
        shifts = np.abs(np.asarray(shifts, dtype=float))
        if self.patch_halfwidth == 0:
            return np.zeros_like(shifts)
        inner = (1.0 - PATCH_TAPER) * self.patch_halfwidth
        x = np.clip((self.patch_halfwidth - shifts) / (self.patch_halfwidth - inner), 0.0, 1.0)
        with np.errstate(divide="ignore", over="ignore"):
            rise = np.where(x > 0, np.exp(-1.0 / np.where(x > 0, x, 1.0)), 0.0)
            fall = np.where(x < 1, np.exp(-1.0 / np.where(x < 1, 1.0 - x, 1.0)), 0.0)
        return rise / (rise + fall)

    def patch_grid(self) -> np.ndarray:
        points = int(math.ceil(2.0 * self.patch_halfwidth / self.patch_step)) + 1
        return np.linspace(-self.patch_halfwidth, self.patch_halfwidth, max(points, 3))


@lru_cache(maxsize=16)
def _hermite_rule(order: int) -> Tuple[np.ndarray, np.ndarray]:
    x, w = roots_hermite(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _weighted_sum(values: np.ndarray, weights: np.ndarray) -> np.ndarray:
    return np.tensordot(weights, values, axes=(0, 0))


def _evaluate(sampler: Sampler, shifts: np.ndarray, chunk_size: int, threads: Optional[int]) -> np.ndarray:
    return map_chunks(lambda chunk: np.asarray(sampler(chunk)), shifts, chunk_size, threads)


def _adaptive_hermite(
    integrand: Sampler,
    dist: DopplerDistribution,
    chunk_size: int,
    threads: Optional[int],
    reference_scale: float = 0.0,
) -> Tuple[np.ndarray, int]:
    order = dist.order
    shifts, weights = dist.nodes(order)
    previous = _weighted_sum(_evaluate(integrand, shifts, chunk_size, threads), weights)
    while True:
        order *= 2
        if order > dist.max_order:
            raise QuadratureError(
                f"Gauss-Hermite average did not converge by order {dist.max_order}; "
                "a feature is narrower than the node spacing, widen the dense patch"
            )
        shifts, weights = dist.nodes(order)
        current = _weighted_sum(_evaluate(integrand, shifts, chunk_size, threads), weights)
        change = float(np.max(np.abs(current - previous)))
        scale = max(float(np.max(np.abs(current))), reference_scale)
        logger.debug("Gauss-Hermite order %d: change %.3e (scale %.3e)", order, change, scale)
        if change <= max(dist.tol * scale, dist.atol):
            return current, order
        previous = current


def gauss_average(
    sampler: Sampler,
    dist: DopplerDistribution,
    threads: Optional[int] = None,
    chunk_size: int = 64,
) -> np.ndarray:
    """Average sampler(shifts) over the Doppler distribution.

    sampler maps a 1-D array of Doppler shifts to an array whose leading
    axis runs over those shifts. Returns the averaged trailing array.
    """
    if dist.patch_halfwidth == 0:
        result, order = _adaptive_hermite(sampler, dist, chunk_size, threads)
        logger.info("Doppler average converged at Gauss-Hermite order %d", order)
        return result

    grid = dist.patch_grid()
    step = grid[1] - grid[0]
    trapezoid = np.full(grid.size, step)
    trapezoid[[0, -1]] *= 0.5
    patch_weights = trapezoid * dist.window(grid) * dist.density(grid)
    patch = _weighted_sum(_evaluate(sampler, grid, chunk_size, threads), patch_weights)

    def remainder(shifts: np.ndarray) -> np.ndarray:
        values = np.asarray(sampler(shifts))
        outside = 1.0 - dist.window(shifts)
        return values * outside.reshape((-1,) + (1,) * (values.ndim - 1))

    # remainder tolerance is relative to the whole average, not to the tail alone
    tail, order = _adaptive_hermite(
        remainder, dist, chunk_size, threads, reference_scale=float(np.max(np.abs(patch)))
    )
    logger.info(
        "Doppler average: %d patch points, remainder converged at Gauss-Hermite order %d", grid.size, order
    )
    return patch + tail
