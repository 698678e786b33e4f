"""
Tests for the batched block-tridiagonal solver.
"""
import numpy as np
import pytest

from darkcomb.services.block_tridiagonal import SingularSystemError, solve_block_tridiagonal


def _random_system(rng, batch, nblocks, size):
    shape = batch + (nblocks, size, size)
    lower = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    upper = rng.normal(size=shape) + 1j * rng.normal(size=shape)
    diag = rng.normal(size=shape) + 1j * rng.normal(size=shape) + 4.0 * size * np.eye(size)
    rhs = rng.normal(size=batch + (nblocks, size)) + 1j * rng.normal(size=batch + (nblocks, size))
    return lower, diag, upper, rhs


def _dense(lower, diag, upper):
    nblocks, size = diag.shape[0], diag.shape[-1]
    A = np.zeros((nblocks * size, nblocks * size), dtype=complex)
    for k in range(nblocks):
        rows = slice(k * size, (k + 1) * size)
        A[rows, rows] = diag[k]
        if k > 0:
            A[rows, (k - 1) * size:k * size] = lower[k]
        if k < nblocks - 1:
            A[rows, (k + 1) * size:(k + 2) * size] = upper[k]
    return A


@pytest.mark.unit
class TestSolveBlockTridiagonal:
    """Forward/backward block elimination against dense solves."""

    @pytest.mark.parametrize("nblocks,size", [(1, 3), (2, 4), (5, 16), (9, 9)])
    def test_matches_dense_solve(self, nblocks, size):
        rng = np.random.default_rng(nblocks * 100 + size)
        lower, diag, upper, rhs = _random_system(rng, (), nblocks, size)
        x = solve_block_tridiagonal(lower, diag, upper, rhs)
        expected = np.linalg.solve(_dense(lower, diag, upper), rhs.reshape(-1))
        np.testing.assert_allclose(x.reshape(-1), expected, rtol=1e-10, atol=1e-12)

    def test_batched_diagonal_with_shared_couplings(self):
        rng = np.random.default_rng(3)
        _, diag, _, rhs = _random_system(rng, (4,), 5, 6)
        lower, _, upper, _ = _random_system(rng, (), 5, 6)
        x = solve_block_tridiagonal(lower, diag, upper, rhs)
        assert x.shape == (4, 5, 6)
        for i in range(4):
            expected = np.linalg.solve(_dense(lower, diag[i], upper), rhs[i].reshape(-1))
            np.testing.assert_allclose(x[i].reshape(-1), expected, rtol=1e-10, atol=1e-12)

    def test_singular_pivot_raises(self):
        size = 3
        diag = np.zeros((2, size, size), dtype=complex)
        lower = np.zeros_like(diag)
        upper = np.zeros_like(diag)
        rhs = np.ones((2, size), dtype=complex)
        with pytest.raises(SingularSystemError, match="singular"):
            solve_block_tridiagonal(lower, diag, upper, rhs)
