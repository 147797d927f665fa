"""Random-walk corpus generation and structural role assignment.

Walks are generated by a numba kernel parallelized over (round, start)
slots; every walk owns an RNG stream derived from the master seed, so
the corpus is bit-identical regardless of worker scheduling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit, prange

from ..datasets import TrustGraph
from ..errors import ConfigError
from .rng import GOLDEN, _mix64, _next_u64, _uniform01

__all__ = [
    "WalkConfig",
    "WalkCorpus",
    "generate_walks",
    "second_order_weights",
    "RoleConfig",
    "assign_roles",
    "dump_corpus",
]


@dataclass(frozen=True)
class WalkConfig:
    num_walks: int = 10
    walk_length: int = 80
    bias: str = "uniform"  # "uniform" | "second_order"
    p: float = 1.0
    q: float = 1.0
    seed: int = 0

    def validate(self) -> None:
        if self.walk_length < 1:
            raise ConfigError(f"walk_length must be >= 1, got {self.walk_length}")
        if self.num_walks < 1:
            raise ConfigError(f"num_walks must be >= 1, got {self.num_walks}")
        if self.bias not in ("uniform", "second_order"):
            raise ConfigError(f"unknown walk bias {self.bias!r}")
        if self.p <= 0 or self.q <= 0:
            raise ConfigError(f"p and q must be > 0, got p={self.p}, q={self.q}")


@dataclass
class WalkCorpus:
    """Fixed-stride walk matrix; row w holds lengths[w] valid node indices."""

    walks: np.ndarray  # (num_walks_total, walk_length) int64, -1 padded
    lengths: np.ndarray  # (num_walks_total,) int64
    num_nodes: int

    @property
    def num_sequences(self) -> int:
        return int(self.walks.shape[0])

    @property
    def num_tokens(self) -> int:
        return int(self.lengths.sum())

    def sequences(self):
        for w in range(self.walks.shape[0]):
            yield self.walks[w, : self.lengths[w]].tolist()

    def vocabulary(self) -> np.ndarray:
        """Token frequency per node index."""
        flat = self.walks.ravel()
        return np.bincount(flat[flat >= 0], minlength=self.num_nodes).astype(np.int64)


@njit(cache=True, inline="always")
def _contains(indices, lo, hi, x):
    # binary search in the sorted neighbor slice [lo, hi)
    while lo < hi:
        mid = (lo + hi) // 2
        v = indices[mid]
        if v == x:
            return True
        if v < x:
            lo = mid + 1
        else:
            hi = mid
    return False


@njit(cache=True)
def _walk_kernel(indptr, indices, starts, num_walks, walk_length, second_order, p, q, seed, out, lengths):
    n_starts = starts.shape[0]
    total = num_walks * n_starts
    inv_p = 1.0 / p
    inv_q = 1.0 / q
    for w in prange(total):
        state = _mix64(np.uint64(seed) + np.uint64(w + 1) * GOLDEN)
        if state == np.uint64(0):
            state = GOLDEN
        cur = starts[w % n_starts]
        out[w, 0] = cur
        steps = 1
        prev = np.int64(-1)
        while steps < walk_length:
            lo = indptr[cur]
            hi = indptr[cur + 1]
            deg = hi - lo
            if deg == 0:
                break  # dead end: truncate
            if not second_order or prev < 0:
                state, r = _next_u64(state)
                nxt = indices[lo + np.int64(r % np.uint64(deg))]
            else:
                # 1/p back to prev, 1 to prev's neighbors, 1/q otherwise
                total_w = 0.0
                plo = indptr[prev]
                phi = indptr[prev + 1]
                for j in range(lo, hi):
                    x = indices[j]
                    if x == prev:
                        total_w += inv_p
                    elif _contains(indices, plo, phi, x):
                        total_w += 1.0
                    else:
                        total_w += inv_q
                state, r = _next_u64(state)
                target = _uniform01(r) * total_w
                acc = 0.0
                nxt = indices[hi - 1]
                for j in range(lo, hi):
                    x = indices[j]
                    if x == prev:
                        acc += inv_p
                    elif _contains(indices, plo, phi, x):
                        acc += 1.0
                    else:
                        acc += inv_q
                    if target < acc:
                        nxt = x
                        break
            out[w, steps] = nxt
            prev = cur
            cur = nxt
            steps += 1
        lengths[w] = steps


def generate_walks(g: TrustGraph, cfg: WalkConfig) -> WalkCorpus:
    """Truncated random walks from every non-isolated node.

    Uniform bias picks the next node uniformly among neighbors; the
    second-order bias reweights by the return parameter ``p`` and the
    in-out parameter ``q`` relative to the previous step.
    """
    if g.directed:
        raise ConfigError("walk generation expects an undirected graph")
    cfg.validate()
    starts = np.flatnonzero(np.diff(g.indptr) > 0).astype(np.int64)
    total = cfg.num_walks * starts.shape[0]
    out = np.full((total, cfg.walk_length), -1, dtype=np.int64)
    lengths = np.zeros(total, dtype=np.int64)
    if total:
        _walk_kernel(
            g.indptr,
            g.indices,
            starts,
            cfg.num_walks,
            cfg.walk_length,
            cfg.bias == "second_order",
            cfg.p,
            cfg.q,
            cfg.seed,
            out,
            lengths,
        )
    return WalkCorpus(out, lengths, g.num_nodes)


def second_order_weights(
    g: TrustGraph, prev: int, cur: int, p: float, q: float
) -> tuple[np.ndarray, np.ndarray]:
    """Normalized next-step distribution from state (prev, cur).

    Mirrors the kernel's bias arithmetic; exposed for exact checks.
    """
    nbrs = g.neighbors(cur)
    prev_nbrs = g.neighbors(prev)
    weights = np.empty(nbrs.shape[0], dtype=np.float64)
    for j, x in enumerate(nbrs):
        if x == prev:
            weights[j] = 1.0 / p
        elif np.searchsorted(prev_nbrs, x) < prev_nbrs.shape[0] and prev_nbrs[
            np.searchsorted(prev_nbrs, x)
        ] == x:
            weights[j] = 1.0
        else:
            weights[j] = 1.0 / q
    return nbrs, weights / weights.sum()


def dump_corpus(corpus: WalkCorpus, path) -> None:
    """One walk per line, space-separated node indices."""
    with open(path, "w", encoding="utf-8") as fh:
        for seq in corpus.sequences():
            fh.write(" ".join(str(t) for t in seq))
            fh.write("\n")


@dataclass(frozen=True)
class RoleConfig:
    feature_kind: str = "wl_degree"  # "wl_degree" | "motif3"
    iterations: int = 2
    num_clusters: int = 50
    log_binning: bool = True

    def validate(self) -> None:
        if self.feature_kind not in ("wl_degree", "motif3"):
            raise ConfigError(f"unknown role feature kind {self.feature_kind!r}")
        if self.iterations < 1:
            raise ConfigError(f"iterations must be >= 1, got {self.iterations}")
        if self.num_clusters < 2:
            raise ConfigError(f"num_clusters must be >= 2, got {self.num_clusters}")


@njit(cache=True)
def _triangle_counts(indptr, indices, out):
    n = indptr.shape[0] - 1
    for v in prange(n):
        lo = indptr[v]
        hi = indptr[v + 1]
        t = 0
        for j in range(lo, hi):
            u = indices[j]
            # merge-count common neighbors of v and u
            a = lo
            b = indptr[u]
            bhi = indptr[u + 1]
            while a < hi and b < bhi:
                x = indices[a]
                y = indices[b]
                if x == y:
                    t += 1
                    a += 1
                    b += 1
                elif x < y:
                    a += 1
                else:
                    b += 1
        out[v] = t // 2  # each triangle counted via two of v's neighbors


def motif3_features(g: TrustGraph) -> np.ndarray:
    """Per-node counts of 3-node connected subgraph positions.

    Columns: triangles through the node, wedges with the node as center,
    wedges with the node as an endpoint.
    """
    n = g.num_nodes
    deg = np.diff(g.indptr).astype(np.float64)
    tri = np.zeros(n, dtype=np.int64)
    if g.num_arcs:
        _triangle_counts(g.indptr, g.indices, tri)
    tri_f = tri.astype(np.float64)
    wedge_center = deg * (deg - 1) / 2.0 - tri_f
    nbr_deg_sum = np.zeros(n, dtype=np.float64)
    if g.num_arcs:
        src = np.repeat(np.arange(n), np.diff(g.indptr))
        np.add.at(nbr_deg_sum, src, deg[g.indices])
    wedge_end = nbr_deg_sum - deg - 2.0 * tri_f
    return np.stack([tri_f, wedge_center, np.maximum(wedge_end, 0.0)], axis=1)


def wl_degree_features(g: TrustGraph, iterations: int) -> np.ndarray:
    """Degree plus ``iterations`` rounds of neighbor-degree-sum aggregation."""
    a = g.to_scipy()
    cols = [np.diff(g.indptr).astype(np.float64)]
    for _ in range(iterations):
        cols.append(a @ cols[-1])
    return np.stack(cols, axis=1)


def assign_roles(g: TrustGraph, cfg: RoleConfig, seed: int = 0) -> np.ndarray:
    """Cluster structural features into ``num_clusters`` role ids per node."""
    cfg.validate()
    if cfg.num_clusters > g.num_nodes:
        raise ConfigError(
            f"num_clusters {cfg.num_clusters} exceeds node count {g.num_nodes}"
        )
    if cfg.feature_kind == "wl_degree":
        feats = wl_degree_features(g, cfg.iterations)
    else:
        feats = motif3_features(g)
    if cfg.log_binning:
        feats = np.floor(np.log2(1.0 + feats))

    uniq = np.unique(feats, axis=0)
    if uniq.shape[0] == 1:
        return np.zeros(g.num_nodes, dtype=np.int64)
    k = min(cfg.num_clusters, uniq.shape[0])

    std = feats.std(axis=0)
    std[std == 0] = 1.0
    from scipy.cluster.vq import kmeans2

    _, labels = kmeans2(
        feats / std, k, minit="++", seed=np.random.default_rng(seed), missing="warn"
    )
    return labels.astype(np.int64)
