"""Factorization-style embeddings of an undirected trust graph.

Five methods share the linear-algebra kernels in linalg: stochastic
first-order factorization of the adjacency, the two spectral embeddings
(normalized Laplacian, locally linear reconstruction), truncated SVD of
a node-proximity operator, and log-shifted transition powers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from numba import njit
from scipy.sparse.linalg import LinearOperator

from ..datasets import TrustGraph
from ..errors import ConfigError, NumericalError
from .base import EmbeddingMatrix, zero_isolated_rows
from .linalg import _DENSE_LIMIT, spectral_radius, symmetric_smallest_eigs, truncated_svd

__all__ = [
    "Katz",
    "RootedPageRank",
    "CommonNeighbors",
    "AdamicAdar",
    "graph_factorization",
    "gf_objective",
    "gf_gradient",
    "laplacian_eigenmaps",
    "locally_linear_embedding",
    "hope",
    "grarep",
    "log_shifted_transition",
]


def _require_undirected(g: TrustGraph, method: str) -> None:
    if g.directed:
        raise ConfigError(f"{method} expects an undirected graph")


def _arc_arrays(g: TrustGraph) -> tuple[np.ndarray, np.ndarray]:
    src = np.repeat(np.arange(g.num_nodes, dtype=np.int64), np.diff(g.indptr))
    return src, g.indices


# ---------------------------------------------------------------- GF


@njit(cache=True)
def _gf_epoch(y, src, dst, order, lr):
    for t in range(order.shape[0]):
        e = order[t]
        u = src[e]
        v = dst[e]
        dot = 0.0
        for k in range(y.shape[1]):
            dot += y[u, k] * y[v, k]
        g = 2.0 * lr * (1.0 - dot)
        for k in range(y.shape[1]):
            y[u, k] += g * y[v, k]


def gf_objective(y: np.ndarray, src: np.ndarray, dst: np.ndarray, reg: float) -> float:
    """Sum of squared edge reconstruction errors plus ridge penalty."""
    err = 1.0 - np.einsum("ij,ij->i", y[src], y[dst])
    with np.errstate(over="ignore"):
        # overflow to inf is fine here, the caller treats it as divergence
        return float((err**2).sum() + 0.5 * reg * (y**2).sum())


def gf_gradient(y: np.ndarray, src: np.ndarray, dst: np.ndarray, reg: float) -> np.ndarray:
    """Full analytic gradient of gf_objective wrt every row of y."""
    err = 1.0 - np.einsum("ij,ij->i", y[src], y[dst])
    grad = reg * y.copy()
    np.subtract.at(grad, src, 2.0 * err[:, None] * y[dst])
    np.subtract.at(grad, dst, 2.0 * err[:, None] * y[src])
    return grad


def graph_factorization(
    g: TrustGraph,
    dim: int = 128,
    lr: float = 0.01,
    reg: float = 0.1,
    epochs: int = 30,
    seed: int = 0,
) -> EmbeddingMatrix:
    """First-order adjacency factorization by per-arc SGD.

    Each epoch visits every arc once in a reshuffled order, pulling the
    endpoint dot product toward 1, then applies one ridge decay step to
    all rows. Divergence (non-finite objective) is reported with the
    last stable epoch.
    """
    _require_undirected(g, "graph factorization")
    if dim < 1:
        raise ConfigError(f"dim must be >= 1, got {dim}")
    rng = np.random.default_rng(seed)
    y = rng.standard_normal((g.num_nodes, dim)) * 0.1
    src, dst = _arc_arrays(g)
    decay = 1.0 - lr * reg
    if decay <= 0:
        raise ConfigError(f"lr*reg = {lr * reg:.3g} >= 1 collapses all vectors")
    history = []
    for epoch in range(epochs):
        if src.size:
            order = rng.permutation(src.size).astype(np.int64)
            _gf_epoch(y, src, dst, order, lr)
        y *= decay
        obj = gf_objective(y, src, dst, reg)
        if not math.isfinite(obj):
            last = epoch - 1 if epoch else None
            raise NumericalError(
                f"graph factorization diverged in epoch {epoch}"
                + (f", last stable epoch {last}" if last is not None else "")
                + "; reduce lr"
            )
        history.append(obj)
    values = zero_isolated_rows(y, g)
    meta = {
        "method": "gf",
        "params": {"dim": dim, "lr": lr, "reg": reg, "epochs": epochs},
        "seed": seed,
        "objective": history,
    }
    return EmbeddingMatrix(np.ascontiguousarray(values), meta)


# ------------------------------------------------------- spectral pair


def _active_subgraph(g: TrustGraph) -> tuple[np.ndarray, sp.csr_matrix]:
    deg = np.diff(g.indptr)
    active = np.flatnonzero(deg > 0)
    a = g.to_scipy()[active][:, active].tocsr()
    return active, a


def _spectral_embed(g: TrustGraph, dim: int, build, upper_bound, seed: int, name: str):
    if dim < 1:
        raise ConfigError(f"dim must be >= 1, got {dim}")
    active, a = _active_subgraph(g)
    n_act = active.size
    values = np.zeros((g.num_nodes, dim), dtype=np.float64)
    eigenvalues: list[float] = []
    if n_act >= 2:
        m = build(a)
        k = min(dim + 1, n_act)
        w, v = symmetric_smallest_eigs(m, k, upper_bound=upper_bound, seed=seed)
        # position 0 is the trivial bottom eigenpair; keep the next dim
        values[active, : k - 1] = v[:, 1:]
        eigenvalues = w[1:].tolist()
    meta = {
        "method": name,
        "params": {"dim": dim},
        "seed": seed,
        "eigenvalues": eigenvalues,
        "effective_dim": len(eigenvalues),
    }
    return EmbeddingMatrix(values, meta)


def laplacian_eigenmaps(g: TrustGraph, dim: int = 128, seed: int = 0) -> EmbeddingMatrix:
    """Bottom non-trivial eigenvectors of the normalized Laplacian.

    Isolated nodes are excluded from the operator and written back as
    zero rows.
    """
    _require_undirected(g, "laplacian eigenmaps")

    def build(a: sp.csr_matrix) -> sp.csr_matrix:
        d = np.asarray(a.sum(axis=1)).ravel()
        inv_sqrt = 1.0 / np.sqrt(d)
        norm = sp.diags(inv_sqrt) @ a @ sp.diags(inv_sqrt)
        return (sp.eye(a.shape[0], format="csr") - norm).tocsr()

    return _spectral_embed(g, dim, build, 2.0, seed, "le")


def locally_linear_embedding(g: TrustGraph, dim: int = 128, seed: int = 0) -> EmbeddingMatrix:
    """Spectral embedding of (I - W)^T (I - W) with W the row-normalized adjacency."""
    _require_undirected(g, "locally linear embedding")

    def build(a: sp.csr_matrix) -> sp.csr_matrix:
        d = np.asarray(a.sum(axis=1)).ravel()
        w = sp.diags(1.0 / d) @ a
        iw = sp.eye(a.shape[0], format="csr") - w
        return (iw.T @ iw).tocsr()

    return _spectral_embed(g, dim, build, None, seed, "lle")


# --------------------------------------------------------------- HOPE


@dataclass(frozen=True)
class Katz:
    beta: float = 0.01


@dataclass(frozen=True)
class RootedPageRank:
    alpha: float = 0.5


@dataclass(frozen=True)
class CommonNeighbors:
    pass


@dataclass(frozen=True)
class AdamicAdar:
    pass


ProximityKind = Katz | RootedPageRank | CommonNeighbors | AdamicAdar

_SERIES_TOL = 1e-12


def _series_horizon(ratio: float, tol: float = _SERIES_TOL) -> int:
    """Terms needed so the geometric tail ratio^(K+1)/(1-ratio) <= tol."""
    if ratio <= 0:
        return 1
    k = math.ceil(math.log(tol * (1.0 - ratio)) / math.log(ratio)) - 1
    return max(int(k), 1)


def _proximity_operator(g: TrustGraph, proximity: ProximityKind):
    a = g.to_scipy()
    n = g.num_nodes
    deg = np.asarray(a.sum(axis=1)).ravel()

    if isinstance(proximity, Katz):
        beta = proximity.beta
        if beta <= 0:
            raise ConfigError(f"katz beta must be > 0, got {beta}")
        rho = spectral_radius(a)
        if rho > 0 and beta * rho >= 1.0:
            raise ConfigError(
                f"katz beta {beta} >= 1/spectral radius ({1.0 / rho:.6g}), series diverges"
            )
        horizon = _series_horizon(beta * rho)

        def apply(x):
            acc = np.zeros_like(x)
            term = x
            for _ in range(horizon):
                term = beta * (a @ term)
                acc = acc + term
            return acc

        return apply, {"proximity": "katz", "beta": beta, "horizon": horizon}

    if isinstance(proximity, RootedPageRank):
        alpha = proximity.alpha
        if not 0.0 < alpha < 1.0:
            raise ConfigError(f"rooted pagerank alpha must lie in (0, 1), got {alpha}")
        inv_deg = np.where(deg > 0, 1.0 / np.where(deg > 0, deg, 1.0), 0.0)
        horizon = _series_horizon(alpha)

        # S = (1-alpha) * sum_k alpha^k P^k with P = D^-1 A (rows of
        # isolated nodes are zero). P is not symmetric, so the transpose
        # direction is supplied separately.
        def apply(x):
            scale = inv_deg if x.ndim == 1 else inv_deg[:, None]
            acc = x.copy()
            term = x
            for _ in range(horizon):
                term = alpha * (scale * (a @ term))
                acc = acc + term
            return (1.0 - alpha) * acc

        def apply_t(x):
            scale = inv_deg if x.ndim == 1 else inv_deg[:, None]
            acc = x.copy()
            term = x
            for _ in range(horizon):
                term = alpha * (a @ (scale * term))
                acc = acc + term
            return (1.0 - alpha) * acc

        return (apply, apply_t), {"proximity": "rpr", "alpha": alpha, "horizon": horizon}

    if isinstance(proximity, CommonNeighbors):

        def apply(x):
            return a @ (a @ x)

        return apply, {"proximity": "cn"}

    if isinstance(proximity, AdamicAdar):
        w = np.where(deg >= 2, 1.0 / np.log(np.where(deg >= 2, deg, 2.0)), 0.0)

        def apply(x):
            scale = w if x.ndim == 1 else w[:, None]
            return a @ (scale * (a @ x))

        return apply, {"proximity": "adamic_adar"}

    raise ConfigError(f"unknown proximity kind {proximity!r}")


def hope(
    g: TrustGraph,
    dim: int = 128,
    proximity: ProximityKind = Katz(0.01),
    seed: int = 0,
) -> EmbeddingMatrix:
    """Asymmetric-transitivity embedding: rank-dim/2 SVD of a proximity
    operator, concatenating U*sqrt(s) and V*sqrt(s).

    The proximity is applied as a matrix-free operator; Katz and rooted
    pagerank use truncated Neumann series with a horizon chosen from the
    geometric tail bound.
    """
    _require_undirected(g, "hope")
    if dim < 2 or dim % 2:
        raise ConfigError(f"hope dim must be even and >= 2, got {dim}")
    n = g.num_nodes
    k = dim // 2
    if g.num_arcs == 0:
        return EmbeddingMatrix(
            np.zeros((n, dim)), {"method": "hope", "params": {"dim": dim}, "seed": seed}
        )
    ops, info = _proximity_operator(g, proximity)
    if isinstance(ops, tuple):
        apply, apply_t = ops
    else:
        apply = apply_t = ops

    if n <= _DENSE_LIMIT or k >= n - 1:
        s_mat = apply(np.eye(n))
        u, s, vt = truncated_svd(s_mat, min(k, n), seed=seed)
    else:
        op = LinearOperator(
            (n, n),
            matvec=apply,
            rmatvec=apply_t,
            matmat=apply,
            rmatmat=apply_t,
            dtype=np.float64,
        )
        u, s, vt = truncated_svd(op, k, seed=seed)

    root = np.sqrt(s)
    values = np.zeros((n, dim), dtype=np.float64)
    values[:, : u.shape[1]] = u * root
    values[:, k : k + u.shape[1]] = vt.T * root
    values = zero_isolated_rows(values, g)
    meta = {
        "method": "hope",
        "params": {"dim": dim, **info},
        "seed": seed,
        "singular_values": s.tolist(),
    }
    return EmbeddingMatrix(np.ascontiguousarray(values), meta)


# -------------------------------------------------------------- GraRep

_POWER_NNZ_LIMIT = 200_000_000


def log_shifted_transition(p_k: sp.spmatrix, num_nodes: int) -> sp.csr_matrix:
    """Positive part of log(P^k / colsum) - log(1/N), entries <= 0 dropped."""
    x = sp.csc_matrix(p_k, dtype=np.float64, copy=True)
    colsum = np.asarray(x.sum(axis=0)).ravel()
    for j in range(x.shape[1]):
        lo, hi = x.indptr[j], x.indptr[j + 1]
        if hi > lo and colsum[j] > 0:
            x.data[lo:hi] /= colsum[j]
    np.log(x.data, out=x.data)
    x.data += math.log(num_nodes)
    x.data[x.data < 0] = 0.0
    x.eliminate_zeros()
    return x.tocsr()


def grarep(
    g: TrustGraph, dim: int = 128, max_order: int = 1, seed: int = 0
) -> EmbeddingMatrix:
    """Concatenated rank-(dim/K) factors of K log-shifted transition powers."""
    if max_order < 1:
        raise ConfigError(f"max_order must be >= 1, got {max_order}")
    if dim < max_order or dim % max_order:
        raise ConfigError(f"dim {dim} must be divisible by max_order {max_order}")
    n = g.num_nodes
    sub_dim = dim // max_order
    a = g.to_scipy()
    deg = np.asarray(a.sum(axis=1)).ravel()
    inv = np.where(deg > 0, 1.0 / np.where(deg > 0, deg, 1.0), 0.0)
    p = (sp.diags(inv) @ a).tocsr()

    blocks = []
    spectra = []
    p_k = None
    for order in range(1, max_order + 1):
        p_k = p if p_k is None else (p_k @ p).tocsr()
        if p_k.nnz > _POWER_NNZ_LIMIT:
            raise NumericalError(
                f"transition power {order} has {p_k.nnz} nonzeros, too dense to factor"
            )
        x = log_shifted_transition(p_k, n)
        if x.nnz == 0:
            blocks.append(np.zeros((n, sub_dim)))
            spectra.append([])
            continue
        u, s, _ = truncated_svd(x, min(sub_dim, min(x.shape)), seed=seed)
        block = np.zeros((n, sub_dim))
        block[:, : u.shape[1]] = u * np.sqrt(s)
        blocks.append(block)
        spectra.append(s.tolist())
    values = zero_isolated_rows(np.hstack(blocks), g)
    meta = {
        "method": "grarep",
        "params": {"dim": dim, "max_order": max_order},
        "seed": seed,
        "singular_values": spectra,
    }
    return EmbeddingMatrix(np.ascontiguousarray(values), meta)
