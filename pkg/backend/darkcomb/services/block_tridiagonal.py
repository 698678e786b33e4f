import logging

import numpy as np

logger = logging.getLogger(__name__)


class SingularSystemError(RuntimeError):
    """A block pivot of the harmonic-balance system is singular."""


def solve_block_tridiagonal(
    lower: np.ndarray, diag: np.ndarray, upper: np.ndarray, rhs: np.ndarray
) -> np.ndarray:
    """Solve a batch of block-tridiagonal systems by forward/backward block elimination.

    Block row k reads lower[k] x[k-1] + diag[k] x[k] + upper[k] x[k+1] = rhs[k].

    Parameters
    ----------
    lower, diag, upper : (..., K, D, D) complex arrays
        lower[..., 0] and upper[..., K-1] are ignored.
    rhs : (..., K, D) complex array

    Returns
    -------
    x : (..., K, D) complex array
    """
    diag = np.asarray(diag)
    nblocks, size = diag.shape[-3], diag.shape[-1]
    batch = np.broadcast_shapes(lower.shape[:-3], diag.shape[:-3], upper.shape[:-3], rhs.shape[:-2])
    dtype = np.result_type(lower, diag, upper, rhs, np.complex128)

    # Eliminated upper couplings and right-hand sides of the forward sweep
    c_prime = np.zeros(batch + (nblocks, size, size), dtype=dtype)
    y = np.zeros(batch + (nblocks, size), dtype=dtype)

    def _pivot_solve(k: int, pivot: np.ndarray, upper_k: np.ndarray, rhs_k: np.ndarray) -> None:
        stacked = np.concatenate(
            [np.broadcast_to(upper_k, batch + (size, size)), np.broadcast_to(rhs_k, batch + (size,))[..., None]],
            axis=-1,
        )
        try:
            solved = np.linalg.solve(np.broadcast_to(pivot, batch + (size, size)), stacked)
        except np.linalg.LinAlgError as exc:
            raise SingularSystemError(
                f"block pivot {k} of {nblocks} is singular; check that decoherence rates are not all zero"
            ) from exc
        if not np.all(np.isfinite(solved)):
            raise SingularSystemError(f"block pivot {k} of {nblocks} produced non-finite values")
        c_prime[..., k, :, :] = solved[..., :size]
        y[..., k, :] = solved[..., size]

    _pivot_solve(0, diag[..., 0, :, :], upper[..., 0, :, :], rhs[..., 0, :])
    for k in range(1, nblocks):
        L_k = lower[..., k, :, :]
        pivot = diag[..., k, :, :] - L_k @ c_prime[..., k - 1, :, :]
        reduced_rhs = rhs[..., k, :] - np.einsum("...ij,...j->...i", L_k, y[..., k - 1, :])
        _pivot_solve(k, pivot, upper[..., k, :, :], reduced_rhs)

    x = np.empty_like(y)
    x[..., nblocks - 1, :] = y[..., nblocks - 1, :]
    for k in range(nblocks - 2, -1, -1):
        x[..., k, :] = y[..., k, :] - np.einsum("...ij,...j->...i", c_prime[..., k, :, :], x[..., k + 1, :])

    logger.debug("Solved %s block-tridiagonal systems (%d blocks of %d)", batch or "1", nblocks, size)
    return x
