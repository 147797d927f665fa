"""Sparse linear-algebra kernels shared by the factorization embedders.

Thin deterministic wrappers over ARPACK: fixed starting vectors, a fixed
singular-vector sign convention, and dense fallbacks where ARPACK cannot
run (k too close to the matrix size) or is not worth it (tiny inputs).
"""

from __future__ import annotations

import numpy as np
from scipy.sparse import issparse
from scipy.sparse.linalg import ArpackError, ArpackNoConvergence, LinearOperator, eigsh, svds

from ..errors import NumericalError

__all__ = ["truncated_svd", "symmetric_smallest_eigs", "spectral_radius"]

# below this order, dense LAPACK beats ARPACK and avoids its k < n-1 limits
_DENSE_LIMIT = 384


def _start_vector(n: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n)
    return v / np.linalg.norm(v)


def _fix_signs(u: np.ndarray, vt: np.ndarray | None) -> None:
    # largest-magnitude component of each left singular vector made positive
    for j in range(u.shape[1]):
        i = int(np.argmax(np.abs(u[:, j])))
        if u[i, j] < 0:
            u[:, j] = -u[:, j]
            if vt is not None:
                vt[j, :] = -vt[j, :]


def truncated_svd(
    m, rank: int, seed: int = 0, maxiter: int | None = None, tol: float = 0.0
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Rank-``rank`` SVD of a sparse matrix or LinearOperator.

    Returns ``(U, s, Vt)`` with singular values non-increasing and a
    deterministic sign convention. Dense LAPACK handles inputs that are
    tiny or where ``rank`` hits ARPACK's ``k < min(shape)`` limit.
    """
    rows, cols = m.shape
    if rank < 1 or rank > min(rows, cols):
        raise ValueError(f"rank must be in [1, {min(rows, cols)}], got {rank}")

    dense_ok = not isinstance(m, LinearOperator)
    if dense_ok and (min(rows, cols) <= _DENSE_LIMIT or rank >= min(rows, cols)):
        dense = m.toarray() if issparse(m) else np.asarray(m, dtype=np.float64)
        u, s, vt = np.linalg.svd(dense, full_matrices=False)
        u, s, vt = u[:, :rank].copy(), s[:rank].copy(), vt[:rank, :].copy()
        _fix_signs(u, vt)
        return u, s, vt

    try:
        u, s, vt = svds(
            m,
            k=rank,
            v0=_start_vector(min(rows, cols), seed),
            maxiter=maxiter,
            tol=tol,
            solver="arpack",
        )
    except (ArpackNoConvergence, ArpackError) as exc:
        raise NumericalError(f"truncated SVD did not converge: {exc}") from exc
    order = np.argsort(s)[::-1]
    u, s, vt = u[:, order], s[order], vt[order, :]
    _fix_signs(u, vt)
    return np.ascontiguousarray(u), s.copy(), np.ascontiguousarray(vt)


def symmetric_smallest_eigs(
    a,
    k: int,
    upper_bound: float | None = None,
    tol: float = 1e-8,
    maxiter: int | None = None,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray]:
    """``k`` smallest eigenpairs of a symmetric (sparse) matrix, ascending.

    The sparse path runs shift-free Lanczos on ``c*I - A`` with
    ``c >= lambda_max`` so the wanted pairs become extremal-largest,
    which ARPACK handles far better than ``which='SM'``. ``upper_bound``
    supplies ``c`` when known (e.g. 2 for a normalized Laplacian).
    """
    n = a.shape[0]
    if k < 1 or k > n:
        raise ValueError(f"k must be in [1, {n}], got {k}")

    if n <= _DENSE_LIMIT or k >= n - 1:
        dense = a.toarray() if issparse(a) else np.asarray(a, dtype=np.float64)
        w, v = np.linalg.eigh(dense)
        return w[:k].copy(), np.ascontiguousarray(v[:, :k])

    if maxiter is None:
        maxiter = 50 * k
    if upper_bound is None:
        upper_bound = abs(spectral_radius(a)) * 1.01 + 1e-9
    c = float(upper_bound)

    def matvec(x):
        return c * x - a @ x

    shifted = LinearOperator((n, n), matvec=matvec, dtype=np.float64)
    try:
        mu, v = eigsh(
            shifted,
            k=k,
            which="LA",
            v0=_start_vector(n, seed),
            maxiter=maxiter,
            tol=tol,
        )
    except ArpackNoConvergence as exc:
        got = len(exc.eigenvalues)
        raise NumericalError(
            f"eigensolver converged only {got}/{k} pairs within {maxiter} iterations"
        ) from exc
    w = c - mu
    order = np.argsort(w)
    w, v = w[order], v[:, order]

    resid = np.linalg.norm(a @ v - v * w, axis=0)
    scale = max(c, 1.0)
    if np.any(resid > 1e-6 * scale * np.sqrt(n)):
        raise NumericalError(f"eigensolver residual norms too large: {resid.max():.3e}")
    return w, np.ascontiguousarray(v)


def spectral_radius(a, iters: int = 200, tol: float = 1e-10, seed: int = 0) -> float:
    """Power-iteration estimate of the dominant eigenvalue magnitude."""
    n = a.shape[0]
    if n == 0:
        return 0.0
    x = np.abs(_start_vector(n, seed)) + 1e-12
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(iters):
        y = a @ x
        norm = np.linalg.norm(y)
        if norm == 0.0:
            return 0.0
        new_lam = float(x @ y)
        x = y / norm
        if abs(new_lam - lam) <= tol * max(1.0, abs(new_lam)):
            lam = new_lam
            break
        lam = new_lam
    return abs(lam)
