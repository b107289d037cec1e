import numpy as np
import pytest
from scipy import linalg, sparse

from abdisk.eigensolve import (
    ConvergenceError,
    IndefiniteMassError,
    dense_solve,
    relative_residuals,
    solve_lowest,
)
from abdisk.fem import DISK_TAGS, ND_TAGS, assemble, build_dofmap
from abdisk.mesh import build_half_disk_mesh, build_unit_square_mesh


def random_spd_pencil(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n))
    K = a @ a.T + n * np.eye(n)
    b = rng.standard_normal((n, n))
    M = b @ b.T / n + np.eye(n)
    return K, M


def lap1d(n):
    return sparse.diags([-np.ones(n - 1), 2 * np.ones(n), -np.ones(n - 1)], [-1, 0, 1], format="csr")


def test_diagonal_pencil():
    b = solve_lowest(np.diag([1.0, 2.0, 3.0]), np.eye(3), 2)
    assert b.values == pytest.approx([1.0, 2.0], abs=1e-14)
    assert np.allclose(np.abs(b.vectors), np.eye(3)[:, :2])


def test_tridiagonal_laplacian():
    n = 50
    b = solve_lowest(lap1d(n), sparse.identity(n, format="csr"), 3)
    exact = 2 - 2 * np.cos(np.arange(1, 4) * np.pi / (n + 1))
    assert np.abs(b.values - exact).max() <= 1e-10


def test_random_spd_against_dense():
    K, M = random_spd_pencil(80, 7)
    it = solve_lowest(K, M, 5)
    ref = dense_solve(K, M)
    assert np.abs(it.values - ref.values[:5]).max() / ref.values[0] <= 1e-8
    assert linalg.eigh(K, M, eigvals_only=True)[:5] == pytest.approx(ref.values[:5], rel=1e-12)


def test_dense_small_cases():
    assert dense_solve(np.diag([2.0, 1.0]), np.eye(2)).values == pytest.approx([1.0, 2.0], abs=1e-15)
    K, _ = random_spd_pencil(30, 1)
    assert np.abs(dense_solve(K, K, vectors=False).values - 1).max() <= 1e-12


def test_dense_vectors_are_m_orthonormal():
    K, M = random_spd_pencil(40, 2)
    b = dense_solve(K, M)
    G = b.vectors.T @ M @ b.vectors
    assert np.abs(G - np.eye(40)).max() <= 1e-10
    assert b.residuals.max() <= 1e-10


def test_unit_square_cross_solver():
    mesh = build_unit_square_mesh(8)
    K, M = assemble(mesh, build_dofmap(mesh, DISK_TAGS))
    it = solve_lowest(K, M, 4)
    ref = dense_solve(K, M, vectors=False)
    assert np.abs(it.values - ref.values[:4]).max() / ref.values[0] <= 1e-8


def test_fem_pencil_contract():
    mesh = build_half_disk_mesh(0.0, 4, 4)
    K, M = assemble(mesh, build_dofmap(mesh, ND_TAGS))
    tol = 1e-8
    b = solve_lowest(K, M, 3, tol=tol)
    assert np.all(np.diff(b.values) >= 0) and np.all(b.values > 0)
    assert b.residuals.max() <= tol
    G = b.vectors.T @ (M @ b.vectors)
    assert np.abs(G - np.eye(3)).max() <= 1e-8
    for lam, u in zip(b.values, b.vectors.T):
        rq = (u @ (K @ u)) / (u @ (M @ u))
        assert abs(rq - lam) <= 10 * tol * lam
    # lowest Ritz value never increases beyond the tolerance
    h = np.array(b.history)
    assert np.all(np.diff(h) <= tol * h[:-1])
    assert np.allclose(relative_residuals(K, M, b.values, b.vectors), b.residuals)


def test_fixed_seed_is_bitwise_deterministic():
    mesh = build_half_disk_mesh(0.3, 3, 3)
    K, M = assemble(mesh, build_dofmap(mesh, ND_TAGS))
    a = solve_lowest(K, M, 2, seed=11)
    b = solve_lowest(K, M, 2, seed=11)
    assert a.values.tobytes() == b.values.tobytes()
    assert a.vectors.tobytes() == b.vectors.tobytes()


def test_errors():
    K, M = random_spd_pencil(40, 3)
    with pytest.raises(ConvergenceError) as info:
        solve_lowest(K, M, 2, maxiter=1, tol=1e-14)
    assert info.value.best_residual > 0
    bad = M.copy()
    bad[0, 0] = -5.0
    with pytest.raises(IndefiniteMassError):
        dense_solve(K, bad)
    with pytest.raises(ValueError):
        solve_lowest(K, M, 0)
    with pytest.raises(ValueError):
        dense_solve(np.eye(2501), np.eye(2501))
