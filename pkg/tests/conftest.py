"""Shared fixtures and independent oracles for the test suite."""

import numpy as np
import pytest

from cryophase.grid import Field, Grid
from cryophase.phase import apply_operator


def dense_phase_matrix(grid: Grid, dt: float, mu: float = 1.0) -> np.ndarray:
    """Dense assembly of the implicit phase operator by probing basis vectors."""
    n = grid.num_nodes
    base = mu * grid.node_volumes() / dt
    mat = np.zeros((n, n))
    for j in range(n):
        e = np.zeros(grid.shape)
        e.reshape(-1)[j] = 1.0
        mat[:, j] = apply_operator(grid, base, e).reshape(-1)
    return mat


def qp_oracle(grid: Grid, beta_old: np.ndarray, g: np.ndarray, dt: float,
              mu: float = 1.0, tol: float = 1e-13,
              max_iter: int = 500_000) -> np.ndarray:
    """Box-constrained QP solution by dense projected gradient descent.

    Minimises 0.5 b^T A b - rhs^T b over [0,1]^N with the fixed step
    1/lambda_max(A); the fixed point of the projection map is the
    variational-inequality solution.  Deliberately independent of the
    Gauss-Seidel production path.
    """
    mat = dense_phase_matrix(grid, dt, mu)
    vol = grid.node_volumes().reshape(-1)
    base = mu * vol / dt
    rhs = base * beta_old.reshape(-1) + vol * g.reshape(-1)
    step = 1.0 / np.linalg.eigvalsh(mat).max()
    b = np.clip(beta_old.reshape(-1).copy(), 0.0, 1.0)
    for _ in range(max_iter):
        b_next = np.clip(b - step * (mat @ b - rhs), 0.0, 1.0)
        if np.max(np.abs(b_next - b)) <= tol:
            return b_next.reshape(grid.shape)
        b = b_next
    raise AssertionError("QP oracle did not converge")


def random_small_grid(rng) -> Grid:
    """Random 1D/2D grid with at most 64 nodes."""
    if rng.random() < 0.5:
        nodes = int(rng.integers(3, 65))
        return Grid(1, (float(rng.uniform(0.5, 2.0)),), (nodes,))
    nx = int(rng.integers(3, 9))
    ny = int(rng.integers(3, 9))
    return Grid(2, (float(rng.uniform(0.5, 2.0)), float(rng.uniform(0.5, 2.0))),
                (nx, ny))


def random_field(rng, grid: Grid, low=0.0, high=1.0) -> Field:
    return Field(grid, rng.uniform(low, high, size=grid.shape))


@pytest.fixture
def rng():
    return np.random.default_rng(20260811)
