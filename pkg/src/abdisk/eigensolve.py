"""Lowest eigenpairs of symmetric-definite pencils K u = lam M u.

``solve_lowest`` is a blocked, preconditioned (LOBPCG-style) iteration;
``dense_solve`` is the brute-force reference: Cholesky reduction followed by
Householder tridiagonalisation and implicit QL.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, sparse

from . import kernels

log = logging.getLogger(__name__)

DEFAULT_SEED = 0x5EED
DENSE_LIMIT = 2500


class EigenSolveError(RuntimeError):
    pass


class ConvergenceError(EigenSolveError):
    def __init__(self, message, best_residual):
        super().__init__(f"{message} (best residual {best_residual:.3e})")
        self.best_residual = best_residual


class IndefiniteMassError(EigenSolveError):
    pass


@dataclass(frozen=True)
class EigenPair:
    lam: float
    vector: np.ndarray
    residual: float


@dataclass
class EigenBasis:
    values: np.ndarray
    vectors: np.ndarray  # columns, M-orthonormal
    residuals: np.ndarray
    iterations: int = 0
    history: list = field(default_factory=list)  # lowest Ritz value per iteration

    def __len__(self):
        return len(self.values)

    @property
    def pairs(self) -> list[EigenPair]:
        return [EigenPair(float(l), self.vectors[:, j], float(r))
                for j, (l, r) in enumerate(zip(self.values, self.residuals))]


def relative_residuals(K, M, values, vectors) -> np.ndarray:
    """||K u - lam M u|| / (|lam| ||M u||) per column."""
    KX = K @ vectors
    MX = M @ vectors
    R = KX - MX * values
    denom = np.abs(values) * np.linalg.norm(MX, axis=0)
    denom = np.where(denom == 0, 1.0, denom)
    return np.linalg.norm(R, axis=0) / denom


def _m_orthonormalize(S, MS, drop=1e-12):
    """SVQB: returns (S Q, M S Q) with (S Q)^T M (S Q) = I, dropping directions
    whose scaled Gram eigenvalue falls below ``drop``."""
    G = S.T @ MS
    G = 0.5 * (G + G.T)
    d = np.sqrt(np.abs(np.diag(G)))
    d[d == 0] = 1.0
    Gs = G / np.outer(d, d)
    theta, Z = np.linalg.eigh(Gs)
    keep = theta > drop * theta.max()
    Q = (Z[:, keep] / np.sqrt(theta[keep])) / d[:, None]
    return S @ Q, MS @ Q


def _sym(H):
    return 0.5 * (H + H.T)


def _orthogonalize(B, M, basis, mbasis):
    """M-orthogonalise B against the M-orthonormal blocks (two passes), then
    M-orthonormalise it.  None if nothing survives."""
    for _ in range(2):
        for Q, MQ in zip(basis, mbasis):
            B = B - Q @ (MQ.T @ B)
    MB = M @ B
    B, MB = _m_orthonormalize(B, MB)
    if B.shape[1] == 0:
        return None
    return B, MB


def _jacobi(K):
    diag = K.diagonal() if sparse.issparse(K) else np.diag(K)
    if np.any(diag <= 0):
        raise EigenSolveError("stiffness diagonal must be positive for the Jacobi preconditioner")
    inv = 1.0 / diag
    return lambda R: R * inv[:, None]


def solve_lowest(K, M, k: int, tol: float = 1e-8, maxiter: int = 5000, seed: int = DEFAULT_SEED,
                 block: int | None = None, preconditioner=None, X0=None) -> EigenBasis:
    """The ``k`` smallest eigenpairs of K u = lam M u.

    Block size defaults to 2k; only the first k columns must reach ``tol``
    (relative residual).  Pencils with n < 4k go to ``dense_solve``.  ``preconditioner`` maps a residual block to a
    correction block; default is the inverse diagonal of K.
    """
    n = K.shape[0]
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > n:
        raise ValueError(f"k={k} exceeds the dimension n={n}")
    if 4 * k > n:
        # too small for a block iteration; the dense solve is exact and cheap here
        full = dense_solve(K, M)
        return EigenBasis(full.values[:k], full.vectors[:, :k], full.residuals[:k], 0, [])
    m = min(block or 2 * k, n // 2)
    m = max(m, k)
    precond = preconditioner or _jacobi(K)
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, m))
    if X0 is not None:
        X0 = np.asarray(X0, dtype=float).reshape(n, -1)
        X[:, : min(m, X0.shape[1])] = X0[:, :m]
    MX = M @ X
    X, MX = _m_orthonormalize(X, MX)
    if X.shape[1] < m:
        raise IndefiniteMassError("initial block lost rank; mass matrix may be indefinite")
    KX = K @ X
    lam, C = np.linalg.eigh(_sym(X.T @ KX))
    X = X @ C
    P = None
    history = []
    best = np.inf
    for it in range(1, maxiter + 1):
        MX = M @ X
        KX = K @ X
        R = KX - MX * lam
        res = np.linalg.norm(R, axis=0) / (np.abs(lam) * np.linalg.norm(MX, axis=0))
        history.append(float(lam[0]))
        best = min(best, float(res[:k].max()))
        if np.all(res[:k] <= tol):
            break
        active = np.flatnonzero(res > tol)
        basis, mbasis = [X], [MX]
        W = _orthogonalize(precond(R[:, active]), M, basis, mbasis)
        if W is not None:
            basis.append(W[0])
            mbasis.append(W[1])
        if P is not None:
            Pa = _orthogonalize(P[:, active], M, basis, mbasis)
            if Pa is not None:
                basis.append(Pa[0])
                mbasis.append(Pa[1])
        S = np.hstack(basis)
        KS = np.hstack([KX] + [K @ B for B in basis[1:]])
        theta, Cs = np.linalg.eigh(_sym(S.T @ KS))
        Cs = Cs[:, :m]
        lam = theta[:m]
        P = S[:, m:] @ Cs[m:, :]
        X = S @ Cs
        if it % 20 == 0:
            # periodic re-orthonormalisation against drift
            X, _ = _m_orthonormalize(X, M @ X)
    else:
        raise ConvergenceError(f"no convergence in {maxiter} iterations", best)
    vals = lam[:k].copy()
    vecs = X[:, :k].copy()
    # sign convention: largest-magnitude entry positive
    idx = np.argmax(np.abs(vecs), axis=0)
    vecs *= np.sign(vecs[idx, np.arange(k)])
    residuals = relative_residuals(K, M, vals, vecs)
    log.debug("solve_lowest: n=%d k=%d iterations=%d", n, k, it)
    return EigenBasis(vals, vecs, residuals, it, history)


def dense_solve(K, M, vectors: bool = True) -> EigenBasis:
    """All eigenpairs (or only eigenvalues) of the pencil via dense reduction."""
    K = K.toarray() if sparse.issparse(K) else np.asarray(K, dtype=float)
    M = M.toarray() if sparse.issparse(M) else np.asarray(M, dtype=float)
    n = K.shape[0]
    if n > DENSE_LIMIT:
        raise ValueError(f"dense_solve limited to n <= {DENSE_LIMIT}, got {n}")
    try:
        L = np.linalg.cholesky(0.5 * (M + M.T))
    except np.linalg.LinAlgError as exc:
        raise IndefiniteMassError("mass matrix is not positive definite") from exc
    Y = linalg.solve_triangular(L, K, lower=True)
    C = linalg.solve_triangular(L, Y.T, lower=True)
    C = 0.5 * (C + C.T)
    d, e, Q = kernels.tridiagonalize(C, vectors)
    w, Z = kernels.tql2(d, e, Q)
    if not vectors:
        return EigenBasis(w, np.empty((n, 0)), np.full(n, np.nan))
    U = linalg.solve_triangular(L, Z, lower=True, trans="T")
    idx = np.argmax(np.abs(U), axis=0)
    U *= np.sign(U[idx, np.arange(n)])
    return EigenBasis(w, U, relative_residuals(K, M, w, U))
