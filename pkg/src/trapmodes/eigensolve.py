"""Smallest eigenpairs of the symmetric-definite pencil ``K u = lambda M u``.

The iterative path is a thick-restart Lanczos process on the shift-invert
operator ``K^{-1} M`` (shift 0), which is self-adjoint in the ``M`` inner
product; its largest Ritz values are the reciprocals of the smallest
eigenvalues. ``dense_oracle`` is an independent full-spectrum check for small
systems.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

log = logging.getLogger(__name__)

try:  # CHOLMOD is optional; SuperLU is the fallback
    from sksparse.cholmod import CholmodError, cholesky as _cholmod_cholesky
except ImportError:  # pragma: no cover - depends on environment
    _cholmod_cholesky = None
    CholmodError = RuntimeError

DENSE_CAP = 4000
_START_SEED = 20240229


class EigenSolveError(RuntimeError):
    """Factorization failure or non-convergence of the eigensolver."""


@dataclass
class EigenSolveResult:
    """Ascending eigenvalues with M-orthonormal eigenvectors.

    ``residuals[i]`` is ``||K u - lambda M u||_2 / (lambda ||M u||_2)``.
    """

    values: np.ndarray
    vectors: np.ndarray
    residuals: np.ndarray
    iterations: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.values)


def _matrix_stats(K) -> str:
    d = K.diagonal()
    return f"n={K.shape[0]}, nnz={K.nnz}, diag in [{d.min():.3e}, {d.max():.3e}]"


def factorize(K: sp.spmatrix, backend: str = "auto"):
    """Return a callable solving ``K x = b`` for SPD ``K``."""
    K = sp.csc_matrix(K)
    if backend not in ("auto", "cholmod", "superlu"):
        raise ValueError(f"unknown factorization backend {backend!r}")
    if backend in ("auto", "cholmod") and _cholmod_cholesky is not None:
        try:
            factor = _cholmod_cholesky(K)
        except CholmodError as exc:
            raise EigenSolveError(f"Cholesky factorization failed ({exc}); {_matrix_stats(K)}") from exc
        return factor
    if backend == "cholmod":
        raise EigenSolveError("CHOLMOD backend requested but scikit-sparse is not installed")
    try:
        lu = spla.splu(K, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=0.0,
                       options={"SymmetricMode": True})
    except RuntimeError as exc:
        raise EigenSolveError(f"sparse factorization failed ({exc}); {_matrix_stats(K)}") from exc
    return lu.solve


def _normalize_signs(vectors: np.ndarray) -> np.ndarray:
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def _residuals(K, M, values, vectors):
    KU = K @ vectors
    MU = M @ vectors
    r = np.linalg.norm(KU - MU * values, axis=0)
    scale = np.abs(values) * np.linalg.norm(MU, axis=0)
    return r / np.where(scale > 0, scale, 1.0)


def smallest_eigenpairs(pair, k: int = 5, tol: float = 1e-9, max_dim: int | None = None,
                        max_restarts: int = 200, backend: str = "auto") -> EigenSolveResult:
    """Compute the ``k`` smallest eigenpairs of ``(pair.K, pair.M)``.

    Parameters
    ----------
    pair : AssembledPair or (K, M) tuple
        Symmetric positive definite stiffness and mass matrices.
    k : int
        Number of wanted pairs.
    tol : float
        Bound on the relative residual of every returned pair.
    max_dim : int, optional
        Krylov basis size; defaults to ``5 k + 30``.
    """
    K, M = (pair.K, pair.M) if hasattr(pair, "K") else pair
    K = sp.csr_matrix(K)
    M = sp.csr_matrix(M)
    n = K.shape[0]
    if k < 1:
        raise ValueError("k must be >= 1")
    if k > n:
        raise ValueError(f"k={k} exceeds the number of free dofs ({n})")
    m = min(max_dim or 5 * k + 30, n)
    solve = factorize(K, backend)

    rng = np.random.default_rng(_START_SEED)
    V = np.zeros((n, m + 1))
    MV = np.zeros((n, m + 1))
    H = np.zeros((m + 1, m))

    def m_normalize(w):
        Mw = M @ w
        nrm = np.sqrt(max(float(w @ Mw), 0.0))
        return nrm, Mw

    v = rng.standard_normal(n)
    nrm, Mv = m_normalize(v)
    V[:, 0], MV[:, 0] = v / nrm, Mv / nrm
    start = 0
    n_solves = 0
    restarts = 0
    while True:
        for j in range(start, m):
            w = solve(MV[:, j])
            n_solves += 1
            h = MV[:, : j + 1].T @ w
            w = w - V[:, : j + 1] @ h
            h2 = MV[:, : j + 1].T @ w  # second Gram-Schmidt pass
            w = w - V[:, : j + 1] @ h2
            H[: j + 1, j] = h + h2
            beta, Mw = m_normalize(w)
            scale = max(np.abs(H[: j + 1, j]).max(), 1e-300)
            if beta <= 1e-12 * scale:
                # invariant subspace: continue with a fresh M-orthogonal direction
                H[j + 1, j] = 0.0
                if j + 1 >= n:
                    break
                w = rng.standard_normal(n)
                for _ in range(2):
                    w = w - V[:, : j + 1] @ (MV[:, : j + 1].T @ w)
                beta, Mw = m_normalize(w)
                V[:, j + 1], MV[:, j + 1] = w / beta, Mw / beta
                continue
            H[j + 1, j] = beta
            V[:, j + 1], MV[:, j + 1] = w / beta, Mw / beta
        size = min(m, n)
        T = np.triu(H[:size, :size])
        T = T + np.triu(T, 1).T
        theta, S = np.linalg.eigh(T)
        order = np.argsort(theta)[::-1]
        theta, S = theta[order], S[:, order]
        if np.any(theta[:k] <= 0):
            raise EigenSolveError("non-positive Ritz value: K or M is not positive definite")
        U = V[:, :size] @ S[:, :k]
        lam = 1.0 / theta[:k]
        res = _residuals(K, M, lam, U)
        log.debug("lanczos restart %d: residuals %s", restarts, res)
        if np.all(res <= tol) or size >= n:
            break
        restarts += 1
        if restarts > max_restarts:
            raise EigenSolveError(
                f"Lanczos did not converge after {max_restarts} restarts "
                f"(max residual {res.max():.3e} > tol {tol:.1e})"
            )
        # thick restart: keep the best p Ritz vectors plus the residual direction
        p = min(max(k + (m - k) // 2, k + 1), m - 1)
        coupling = H[m, m - 1] * S[m - 1, :p]
        Vp = V[:, :m] @ S[:, :p]
        MVp = MV[:, :m] @ S[:, :p]
        V[:, :p], MV[:, :p] = Vp, MVp
        V[:, p], MV[:, p] = V[:, m].copy(), MV[:, m].copy()
        V[:, p + 1:] = 0.0
        MV[:, p + 1:] = 0.0
        H[:] = 0.0
        H[np.arange(p), np.arange(p)] = theta[:p]
        H[:p, p] = coupling
        start = p

    idx = np.argsort(lam)
    lam, U = lam[idx], U[:, idx]
    # M-orthonormalize (Ritz vectors already are, up to rounding)
    G = U.T @ (M @ U)
    L = np.linalg.cholesky(0.5 * (G + G.T))
    U = sla.solve_triangular(L, U.T, lower=True).T
    U = _normalize_signs(U)
    res = _residuals(K, M, lam, U)
    if np.any(res > tol):
        raise EigenSolveError(f"residuals {res.max():.3e} exceed tol {tol:.1e} after orthonormalization")
    return EigenSolveResult(
        values=lam,
        vectors=U,
        residuals=res,
        iterations={"solves": n_solves, "restarts": restarts, "basis_size": m},
    )


def dense_oracle(pair) -> EigenSolveResult:
    """All eigenpairs by Cholesky reduction of ``M`` and a dense symmetric solve."""
    K, M = (pair.K, pair.M) if hasattr(pair, "K") else pair
    n = K.shape[0]
    if n > DENSE_CAP:
        raise ValueError(f"dense oracle limited to {DENSE_CAP} dofs, got {n}")
    Kd = K.toarray() if sp.issparse(K) else np.asarray(K, dtype=float)
    Md = M.toarray() if sp.issparse(M) else np.asarray(M, dtype=float)
    L = np.linalg.cholesky(Md)
    X = sla.solve_triangular(L, Kd, lower=True)
    C = sla.solve_triangular(L, X.T, lower=True)
    C = 0.5 * (C + C.T)
    values, Y = np.linalg.eigh(C)
    U = sla.solve_triangular(L.T, Y, lower=False)
    U = _normalize_signs(U)
    return EigenSolveResult(values=values, vectors=U, residuals=_residuals(Kd, Md, values, U),
                            iterations={"method": "dense"})
