"""Neighbor selection and rating-weighted item scoring.

A recommendation for cold-start user u is built in two steps: pick the
k most similar users (cosine over an embedding, or one of the trust
baselines), then score items by similarity-weighted sums of neighbor
ratings and keep the top n. All rankings break ties by ascending index
so results are reproducible across platforms.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .datasets import RatingsMatrix, TrustGraph
from .errors import ConfigError

__all__ = [
    "NeighborList",
    "RecommendationList",
    "knn_from_embedding",
    "neighbors_direct",
    "neighbors_undirected",
    "neighbors_jaccard",
    "neighbors_katz",
    "score_items",
    "most_popular",
    "popularity_ranking",
    "dump_recommendations",
]

_BLOCK = 512


@dataclass
class NeighborList:
    """Neighbors of one target, sorted by similarity desc then index asc."""

    target: int
    neighbors: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    similarities: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __len__(self) -> int:
        return int(self.neighbors.shape[0])


@dataclass
class RecommendationList:
    """Ranked items for one target, scores non-increasing."""

    target: int
    items: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))
    scores: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __len__(self) -> int:
        return int(self.items.shape[0])


def _top_by_value(values: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Indices of the k largest finite values, ties broken by index asc."""
    finite = np.isfinite(values)
    n_valid = int(finite.sum())
    k = min(k, n_valid)
    if k == 0:
        return np.empty(0, dtype=np.int64), np.empty(0)
    if k == n_valid:
        idx = np.flatnonzero(finite)
    else:
        # partition, then resolve ties straddling the k-th value exactly
        kth = -np.partition(-np.where(finite, values, -np.inf), k - 1)[k - 1]
        above = np.flatnonzero(finite & (values > kth))
        equal = np.flatnonzero(finite & (values == kth))
        idx = np.concatenate([above, equal[: k - above.size]])
    order = np.lexsort((idx, -values[idx]))
    idx = idx[order]
    return idx.astype(np.int64), values[idx]


def knn_from_embedding(
    emb_values: np.ndarray, targets: np.ndarray, k: int = 40
) -> list[NeighborList]:
    """Cosine k-nearest users in embedding space.

    Zero-norm rows are excluded both as candidates and as targets (a
    zero-vector target gets an empty list, which downstream counts as
    uncovered). Negative similarities are kept; only the target itself
    is never its own neighbor.
    """
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    values = np.asarray(emb_values, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.int64)
    norms = np.linalg.norm(values, axis=1)
    valid = norms > 0
    unit = np.zeros_like(values)
    unit[valid] = values[valid] / norms[valid, None]

    out: list[NeighborList] = []
    for lo in range(0, targets.size, _BLOCK):
        chunk = targets[lo : lo + _BLOCK]
        sims = unit[chunk] @ unit.T
        sims[:, ~valid] = -np.inf
        sims[np.arange(chunk.size), chunk] = -np.inf
        for row, t in enumerate(chunk):
            if not valid[t]:
                out.append(NeighborList(int(t)))
                continue
            idx, vals = _top_by_value(sims[row], k)
            out.append(NeighborList(int(t), idx, vals))
    return out


def _truncate_by_index(nbrs: np.ndarray, k: int) -> np.ndarray:
    return np.sort(nbrs)[:k].astype(np.int64)


def neighbors_direct(
    g: TrustGraph, targets: np.ndarray, k: int = 40, direction: str = "out"
) -> list[NeighborList]:
    """Directly trusted users, unit similarity; k lowest indices kept.

    ``direction`` picks arcs leaving the target ("out") or entering it
    ("in"); on an undirected graph both agree.
    """
    if direction not in ("out", "in"):
        raise ConfigError(f"direction must be 'out' or 'in', got {direction!r}")
    if direction == "in" and g.directed:
        rev = g.to_scipy().T.tocsr()
        rev.sort_indices()
        get = lambda t: rev.indices[rev.indptr[t] : rev.indptr[t + 1]].astype(np.int64)
    else:
        get = g.neighbors
    out = []
    for t in np.asarray(targets, dtype=np.int64):
        nbrs = _truncate_by_index(get(int(t)), k)
        out.append(NeighborList(int(t), nbrs, np.ones(nbrs.size)))
    return out


def neighbors_undirected(g: TrustGraph, targets: np.ndarray, k: int = 40) -> list[NeighborList]:
    """Trust neighbors ignoring arc direction."""
    if g.directed:
        raise ConfigError("neighbors_undirected expects a symmetrized graph")
    return neighbors_direct(g, targets, k, direction="out")


def neighbors_jaccard(g: TrustGraph, targets: np.ndarray, k: int = 40) -> list[NeighborList]:
    """Neighbor-set Jaccard over the 2-hop neighborhood.

    Candidates sharing no neighbor with the target never appear, so a
    target whose 2-hop set is empty stays uncovered.
    """
    if g.directed:
        raise ConfigError("neighbors_jaccard expects a symmetrized graph")
    deg = np.diff(g.indptr)
    out = []
    for t in np.asarray(targets, dtype=np.int64):
        t = int(t)
        nbrs = g.neighbors(t)
        if nbrs.size == 0:
            out.append(NeighborList(t))
            continue
        two_hop = np.concatenate([g.neighbors(int(v)) for v in nbrs])
        cand, common = np.unique(two_hop, return_counts=True)
        keep = cand != t
        cand, common = cand[keep], common[keep]
        union = deg[t] + deg[cand] - common
        jac = common / union
        top = min(k, cand.size)
        order = np.lexsort((cand, -jac))[:top]
        out.append(NeighborList(t, cand[order].astype(np.int64), jac[order]))
    return out


def neighbors_katz(
    g: TrustGraph,
    targets: np.ndarray,
    k: int = 40,
    alpha: float = 0.05,
    horizon: int = 6,
) -> list[NeighborList]:
    """Truncated Katz similarity sum_{j=1..horizon} alpha^j A^j.

    alpha must stay below 1/spectral_radius(A) so the truncated series
    approximates the convergent one.
    """
    from .embeddings.linalg import spectral_radius

    if g.directed:
        raise ConfigError("neighbors_katz expects a symmetrized graph")
    if horizon < 1:
        raise ConfigError(f"horizon must be >= 1, got {horizon}")
    a = g.to_scipy()
    rho = spectral_radius(a)
    if rho > 0 and alpha * rho >= 1.0:
        raise ConfigError(
            f"alpha {alpha} >= 1/spectral radius ({1.0 / rho:.6g}), Katz series diverges"
        )
    targets = np.asarray(targets, dtype=np.int64)
    out: list[NeighborList] = []
    for lo in range(0, targets.size, _BLOCK):
        chunk = targets[lo : lo + _BLOCK]
        block = np.zeros((g.num_nodes, chunk.size))
        block[chunk, np.arange(chunk.size)] = 1.0
        acc = np.zeros_like(block)
        term = block
        for _ in range(horizon):
            term = alpha * (a @ term)
            acc += term
        for col, t in enumerate(chunk):
            scores = acc[:, col]
            scores[t] = 0.0
            scores = np.where(scores > 0, scores, -np.inf)
            idx, vals = _top_by_value(scores, k)
            out.append(NeighborList(int(t), idx, vals))
    return out


def score_items(
    neighbor_lists: list[NeighborList],
    ratings: RatingsMatrix,
    n: int = 10,
    exclude_items: dict[int, np.ndarray] | None = None,
) -> list[RecommendationList]:
    """Similarity-weighted neighbor ratings, top n per target.

    score(i, u) = sum over neighbors v of sim(u, v) * rating_v(i). Items
    listed in ``exclude_items[target]`` are removed before ranking. A
    target with no neighbors (or whose neighbors rated nothing) gets an
    empty list.
    """
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    buffer = np.zeros(ratings.num_items)
    out = []
    for nl in neighbor_lists:
        touched: list[np.ndarray] = []
        for v, sim in zip(nl.neighbors, nl.similarities):
            items, vals = ratings.user_items(int(v))
            if items.size:
                buffer[items] += sim * vals
                touched.append(items)
        if not touched:
            out.append(RecommendationList(nl.target))
            continue
        cand = np.unique(np.concatenate(touched))
        if exclude_items is not None:
            banned = exclude_items.get(nl.target)
            if banned is not None and len(banned):
                cand = cand[~np.isin(cand, banned)]
        scores = buffer[cand]
        top = min(n, cand.size)
        order = np.lexsort((cand, -scores))[:top]
        out.append(RecommendationList(nl.target, cand[order].astype(np.int64), scores[order]))
        for items in touched:
            buffer[items] = 0.0
    return out


def popularity_ranking(ratings: RatingsMatrix) -> np.ndarray:
    """Every item sorted by rating count desc, index asc."""
    pop = ratings.item_pop
    return np.lexsort((np.arange(pop.size), -pop)).astype(np.int64)


def most_popular(ratings: RatingsMatrix, n: int = 10) -> RecommendationList:
    """Global popularity top n; identical for every target."""
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    ranked = popularity_ranking(ratings)[:n]
    return RecommendationList(-1, ranked, ratings.item_pop[ranked].astype(np.float64))


def dump_recommendations(
    recs: list[RecommendationList], ratings: RatingsMatrix, graph: TrustGraph, path
) -> None:
    """Plain-text dump: one "user_id item_id rank score" line per slot."""
    with open(path, "w", encoding="utf-8") as fh:
        for rl in recs:
            uid = graph.node_ids[rl.target]
            for rank, (item, score) in enumerate(zip(rl.items, rl.scores), start=1):
                fh.write(f"{uid} {ratings.item_ids[item]} {rank} {score:.10g}\n")
