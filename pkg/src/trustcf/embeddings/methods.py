"""Walk-based and edge-sampling embedding methods.

Thin compositions over the walk generator and the shared SGNS trainer,
plus LINE, which skips the corpus and samples arcs directly.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from ..datasets import TrustGraph
from ..errors import ConfigError, DataError, NumericalError
from .base import EmbeddingMatrix, zero_isolated_rows
from .rng import _mix64, build_alias
from .sgns import SgnsConfig, _pairs_epoch, train_sgns
from .walks import RoleConfig, WalkConfig, assign_roles, generate_walks

__all__ = ["deepwalk", "node2vec", "role2vec", "line_embedding"]


def _walk_and_train(
    g: TrustGraph,
    walk_cfg: WalkConfig,
    sgns_cfg: SgnsConfig,
    method: str,
    roles: np.ndarray | None = None,
    extra: dict | None = None,
) -> EmbeddingMatrix:
    corpus = generate_walks(g, walk_cfg)
    emb = train_sgns(corpus, sgns_cfg, roles=roles)
    values = zero_isolated_rows(emb.values, g)
    params = {
        "dim": sgns_cfg.dim,
        "num_walks": walk_cfg.num_walks,
        "walk_length": walk_cfg.walk_length,
        "window": sgns_cfg.window,
        "negatives": sgns_cfg.negatives,
        "epochs": sgns_cfg.epochs,
        "lr": sgns_cfg.lr,
    }
    if extra:
        params.update(extra)
    meta = {
        "method": method,
        "params": params,
        "seed": sgns_cfg.seed,
        "loss": emb.meta["loss"],
    }
    return EmbeddingMatrix(np.ascontiguousarray(values), meta)


def deepwalk(
    g: TrustGraph, walk_cfg: WalkConfig | None = None, sgns_cfg: SgnsConfig | None = None
) -> EmbeddingMatrix:
    """Uniform truncated walks fed to skip-gram negative sampling."""
    walk_cfg = walk_cfg or WalkConfig()
    if walk_cfg.bias != "uniform":
        walk_cfg = WalkConfig(
            num_walks=walk_cfg.num_walks,
            walk_length=walk_cfg.walk_length,
            bias="uniform",
            seed=walk_cfg.seed,
        )
    return _walk_and_train(g, walk_cfg, sgns_cfg or SgnsConfig(), "deepwalk")


def node2vec(
    g: TrustGraph,
    p: float = 1.0,
    q: float = 1.0,
    walk_cfg: WalkConfig | None = None,
    sgns_cfg: SgnsConfig | None = None,
) -> EmbeddingMatrix:
    """Second-order biased walks (return p, in-out q) plus skip-gram."""
    base = walk_cfg or WalkConfig()
    walk_cfg = WalkConfig(
        num_walks=base.num_walks,
        walk_length=base.walk_length,
        bias="second_order",
        p=p,
        q=q,
        seed=base.seed,
    )
    return _walk_and_train(
        g, walk_cfg, sgns_cfg or SgnsConfig(), "node2vec", extra={"p": p, "q": q}
    )


def role2vec(
    g: TrustGraph,
    role_cfg: RoleConfig | None = None,
    walk_cfg: WalkConfig | None = None,
    sgns_cfg: SgnsConfig | None = None,
) -> EmbeddingMatrix:
    """Walks relabeled by structural role; nodes share their role's vector."""
    role_cfg = role_cfg or RoleConfig()
    sgns_cfg = sgns_cfg or SgnsConfig()
    roles = assign_roles(g, role_cfg, seed=sgns_cfg.seed)
    return _walk_and_train(
        g,
        walk_cfg or WalkConfig(),
        sgns_cfg,
        "role2vec",
        roles=roles,
        extra={
            "feature_kind": role_cfg.feature_kind,
            "num_clusters": role_cfg.num_clusters,
            "num_roles": int(roles.max()) + 1,
        },
    )


def line_embedding(
    g: TrustGraph,
    dim: int = 128,
    order: str = "second",
    samples: int | None = None,
    negatives: int = 5,
    lr: float = 0.025,
    seed: int = 0,
) -> EmbeddingMatrix:
    """Edge-sampled first- or second-order proximity embedding.

    Each sample drags a uniformly drawn arc's endpoint vectors together
    against ``negatives`` noise nodes drawn from degree^0.75. First
    order shares one vector table for both sides; second order keeps a
    separate context table.
    """
    if g.directed:
        raise ConfigError("line embedding expects an undirected graph")
    if order not in ("first", "second"):
        raise ConfigError(f"order must be 'first' or 'second', got {order!r}")
    if dim < 1:
        raise ConfigError(f"dim must be >= 1, got {dim}")
    arcs = g.num_arcs
    if arcs == 0:
        raise DataError("graph has no edges to sample")
    if samples is None:
        samples = max(1_000_000, 50 * arcs)

    src = np.repeat(np.arange(g.num_nodes, dtype=np.int64), np.diff(g.indptr))
    dst = g.indices
    deg = np.diff(g.indptr).astype(np.float64)
    prob, alias = build_alias(deg**0.75)

    rng = np.random.default_rng(seed)
    syn0 = (rng.random((g.num_nodes, dim)) - 0.5) / dim
    syn1 = syn0 if order == "first" else np.zeros((g.num_nodes, dim), dtype=np.float64)

    # reuse the pair kernel: one "epoch" per chunk keeps loss visibility
    chunks = 10
    per_chunk = max(samples // chunks, 1)
    losses = []
    done = 0
    total = float(per_chunk * chunks)
    lr_floor = lr * 1e-4
    for chunk in range(chunks):
        state = np.uint64(_mix64(np.uint64(seed) + np.uint64(chunk + 1)))
        pick = rng.integers(0, arcs, size=per_chunk).astype(np.int64)
        loss, count, done, _ = _pairs_epoch(
            src,
            dst,
            pick,
            syn0,
            syn1,
            negatives,
            prob,
            alias,
            lr,
            lr_floor,
            total,
            float(done),
            state,
        )
        mean = loss / count if count else 0.0
        if not np.isfinite(mean):
            raise NumericalError(f"line loss became non-finite in chunk {chunk}")
        losses.append(mean)

    values = zero_isolated_rows(syn0, g)
    meta = {
        "method": "line",
        "params": {
            "dim": dim,
            "order": order,
            "samples": per_chunk * chunks,
            "negatives": negatives,
            "lr": lr,
        },
        "seed": seed,
        "loss": losses,
    }
    return EmbeddingMatrix(np.ascontiguousarray(values), meta)
