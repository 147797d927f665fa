"""Loading, indexing and splitting of ratings and trust-network files.

All structures are immutable after construction and safe to share across
workers. External user/item ids are kept alongside the dense indices the
rest of the toolkit operates on.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable

import numpy as np

from .errors import DataError, DataFormatError

__all__ = [
    "RatingFormat",
    "TrustFormat",
    "RATING_PRESETS",
    "TRUST_PRESETS",
    "LoadReport",
    "TrustGraph",
    "RatingsMatrix",
    "SplitSpec",
    "load_ratings",
    "load_trust",
    "to_undirected",
    "align_users",
    "split_users",
    "restrict_to_users",
]


@dataclass(frozen=True)
class RatingFormat:
    """Column layout of a ratings file; ``sep=None`` splits on whitespace."""

    sep: str | None = None
    user_col: int = 0
    item_col: int = 1
    rating_col: int = 2


@dataclass(frozen=True)
class TrustFormat:
    """Column layout of a trust file (trustor, trustee[, value])."""

    sep: str | None = None
    source_col: int = 0
    target_col: int = 1


# Presets for the common public distributions of the three benchmark datasets.
# Epinions (trustlet) and FilmTrust (librec) ship whitespace-separated
# "user item rating" / "trustor trustee value" files; the Ciao DVD dump is
# comma-separated with the rating in the fifth column.
RATING_PRESETS: dict[str, RatingFormat] = {
    "epinions": RatingFormat(),
    "filmtrust": RatingFormat(),
    "ciao": RatingFormat(sep=",", user_col=0, item_col=1, rating_col=4),
}

TRUST_PRESETS: dict[str, TrustFormat] = {
    "epinions": TrustFormat(),
    "filmtrust": TrustFormat(),
    "ciao": TrustFormat(sep=","),
}


@dataclass
class LoadReport:
    """Counts of accepted/rejected records for one input file."""

    records_read: int = 0
    records_dropped: int = 0
    reasons: dict[str, int] = field(default_factory=dict)

    def drop(self, reason: str) -> None:
        self.records_dropped += 1
        self.reasons[reason] = self.reasons.get(reason, 0) + 1

    def to_dict(self) -> dict:
        return {
            "records_read": self.records_read,
            "records_dropped": self.records_dropped,
            "reasons": self.reasons,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


class TrustGraph:
    """Unweighted trust network in CSR form.

    Neighbor lists are sorted ascending with no duplicates and no
    self-loops. For an undirected graph both arc directions are stored
    and the adjacency is symmetric.
    """

    def __init__(
        self,
        num_nodes: int,
        indptr: np.ndarray,
        indices: np.ndarray,
        directed: bool,
        node_ids: np.ndarray,
    ):
        self.num_nodes = int(num_nodes)
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.indices = np.asarray(indices, dtype=np.int64)
        self.directed = bool(directed)
        self.node_ids = np.asarray(node_ids, dtype=np.int64)
        self._index: dict[int, int] | None = None

    @property
    def num_arcs(self) -> int:
        """Stored directed arcs (an undirected edge counts twice)."""
        return int(self.indices.shape[0])

    @property
    def num_edges(self) -> int:
        """Directed: arc count; undirected: unique edge count."""
        return self.num_arcs if self.directed else self.num_arcs // 2

    def neighbors(self, u: int) -> np.ndarray:
        return self.indices[self.indptr[u] : self.indptr[u + 1]]

    def out_degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    def degrees(self) -> np.ndarray:
        """Total degree: out-degree plus in-degree for directed graphs."""
        out = np.diff(self.indptr)
        if not self.directed:
            return out
        inc = np.bincount(self.indices, minlength=self.num_nodes)
        return out + inc

    def index_of(self, external_id: int) -> int:
        if self._index is None:
            self._index = {int(e): i for i, e in enumerate(self.node_ids)}
        return self._index[int(external_id)]

    def has_edge(self, u: int, v: int) -> bool:
        row = self.neighbors(u)
        pos = np.searchsorted(row, v)
        return pos < row.shape[0] and row[pos] == v

    def to_scipy(self):
        from scipy.sparse import csr_matrix

        data = np.ones(self.num_arcs, dtype=np.float64)
        return csr_matrix(
            (data, self.indices, self.indptr), shape=(self.num_nodes, self.num_nodes)
        )


class RatingsMatrix:
    """Sparse user-item ratings in user-major CSR order.

    ``item_pop[i]`` is the number of distinct users with an entry for
    item ``i``; all stored ratings are strictly positive.
    """

    def __init__(
        self,
        num_users: int,
        num_items: int,
        user_ptr: np.ndarray,
        item_idx: np.ndarray,
        values: np.ndarray,
        user_ids: np.ndarray,
        item_ids: np.ndarray,
    ):
        self.num_users = int(num_users)
        self.num_items = int(num_items)
        self.user_ptr = np.asarray(user_ptr, dtype=np.int64)
        self.item_idx = np.asarray(item_idx, dtype=np.int64)
        self.values = np.asarray(values, dtype=np.float64)
        self.user_ids = np.asarray(user_ids, dtype=np.int64)
        self.item_ids = np.asarray(item_ids, dtype=np.int64)
        self.item_pop = np.bincount(self.item_idx, minlength=self.num_items).astype(
            np.int64
        )

    @property
    def num_ratings(self) -> int:
        return int(self.item_idx.shape[0])

    def user_items(self, u: int) -> tuple[np.ndarray, np.ndarray]:
        lo, hi = self.user_ptr[u], self.user_ptr[u + 1]
        return self.item_idx[lo:hi], self.values[lo:hi]

    def ratings_per_user(self) -> np.ndarray:
        return np.diff(self.user_ptr)

    def recount_item_pop(self) -> np.ndarray:
        """Recompute popularity from the entries (each (user, item) is unique)."""
        return np.bincount(self.item_idx, minlength=self.num_items).astype(np.int64)


@dataclass
class SplitSpec:
    """Warm/cold user partition plus the trust-connected validation/test sets.

    All fields are sorted arrays of dense user indices.
    """

    warm_users: np.ndarray
    cold_users: np.ndarray
    validation_users: np.ndarray
    test_users: np.ndarray
    threshold: int = 10

    def counts(self) -> dict[str, int]:
        return {
            "warm": int(self.warm_users.size),
            "cold": int(self.cold_users.size),
            "validation": int(self.validation_users.size),
            "test": int(self.test_users.size),
        }


def _open_lines(source) -> Iterable[str]:
    if isinstance(source, (str, Path)):
        path = Path(source)
        if not path.exists():
            raise DataError(f"input file not found: {path}")
        return path.read_text(encoding="utf-8", errors="replace").splitlines()
    if isinstance(source, bytes):
        return source.decode("utf-8", errors="replace").splitlines()
    if isinstance(source, io.IOBase) or hasattr(source, "read"):
        data = source.read()
        if isinstance(data, bytes):
            data = data.decode("utf-8", errors="replace")
        return data.splitlines()
    raise DataError(f"unsupported source type: {type(source)!r}")


def _split_line(line: str, sep: str | None) -> list[str]:
    if sep is None:
        return line.split()
    return [t.strip() for t in line.split(sep)]


def _parse_int(token: str, lineno: int, what: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise DataFormatError(f"line {lineno}: cannot parse {what} {token!r}") from None


def load_ratings(
    source, fmt: RatingFormat = RatingFormat()
) -> tuple[RatingsMatrix, LoadReport]:
    """Parse a ratings file into a densely re-indexed ``RatingsMatrix``.

    Malformed records raise ``DataFormatError`` with their line number;
    records with a non-positive rating are dropped and counted in the
    returned ``LoadReport``. Duplicate (user, item) records keep the
    last occurrence.
    """
    report = LoadReport()
    needed = max(fmt.user_col, fmt.item_col, fmt.rating_col) + 1
    entries: dict[tuple[int, int], float] = {}
    user_index: dict[int, int] = {}
    item_index: dict[int, int] = {}

    for lineno, raw in enumerate(_open_lines(source), start=1):
        line = raw.strip()
        if not line:
            continue
        report.records_read += 1
        tokens = _split_line(line, fmt.sep)
        if len(tokens) < needed:
            raise DataFormatError(
                f"line {lineno}: expected at least {needed} fields, got {len(tokens)}"
            )
        user = _parse_int(tokens[fmt.user_col], lineno, "user id")
        item = _parse_int(tokens[fmt.item_col], lineno, "item id")
        try:
            rating = float(tokens[fmt.rating_col])
        except ValueError:
            raise DataFormatError(
                f"line {lineno}: cannot parse rating {tokens[fmt.rating_col]!r}"
            ) from None
        if not np.isfinite(rating) or rating <= 0:
            report.drop("non_positive_rating")
            continue
        if user not in user_index:
            user_index[user] = len(user_index)
        if item not in item_index:
            item_index[item] = len(item_index)
        key = (user_index[user], item_index[item])
        if key in entries:
            report.drop("duplicate")
        entries[key] = rating

    num_users = len(user_index)
    num_items = len(item_index)
    nnz = len(entries)
    users = np.empty(nnz, dtype=np.int64)
    items = np.empty(nnz, dtype=np.int64)
    vals = np.empty(nnz, dtype=np.float64)
    for pos, ((u, i), r) in enumerate(entries.items()):
        users[pos], items[pos], vals[pos] = u, i, r
    order = np.lexsort((items, users))
    users, items, vals = users[order], items[order], vals[order]
    user_ptr = np.zeros(num_users + 1, dtype=np.int64)
    np.add.at(user_ptr, users + 1, 1)
    user_ptr = np.cumsum(user_ptr)

    user_ids = np.fromiter(user_index.keys(), dtype=np.int64, count=num_users)
    item_ids = np.fromiter(item_index.keys(), dtype=np.int64, count=num_items)
    matrix = RatingsMatrix(num_users, num_items, user_ptr, items, vals, user_ids, item_ids)
    return matrix, report


def load_trust(
    source, fmt: TrustFormat = TrustFormat()
) -> tuple[TrustGraph, LoadReport]:
    """Parse a trust file into a directed ``TrustGraph``.

    Self-loops and duplicate arcs are dropped and counted; an optional
    trust-value column is ignored (the network is unweighted). Nodes are
    registered for every well-formed record, including dropped ones.
    """
    report = LoadReport()
    needed = max(fmt.source_col, fmt.target_col) + 1
    node_index: dict[int, int] = {}
    arcs: set[tuple[int, int]] = set()
    arc_list: list[tuple[int, int]] = []

    for lineno, raw in enumerate(_open_lines(source), start=1):
        line = raw.strip()
        if not line:
            continue
        report.records_read += 1
        tokens = _split_line(line, fmt.sep)
        if len(tokens) < needed:
            raise DataFormatError(
                f"line {lineno}: expected at least {needed} fields, got {len(tokens)}"
            )
        src = _parse_int(tokens[fmt.source_col], lineno, "trustor id")
        dst = _parse_int(tokens[fmt.target_col], lineno, "trustee id")
        if src not in node_index:
            node_index[src] = len(node_index)
        if dst not in node_index:
            node_index[dst] = len(node_index)
        if src == dst:
            report.drop("self_loop")
            continue
        arc = (node_index[src], node_index[dst])
        if arc in arcs:
            report.drop("duplicate")
            continue
        arcs.add(arc)
        arc_list.append(arc)

    num_nodes = len(node_index)
    node_ids = np.fromiter(node_index.keys(), dtype=np.int64, count=num_nodes)
    graph = _graph_from_arcs(num_nodes, arc_list, directed=True, node_ids=node_ids)
    return graph, report


def _graph_from_arcs(
    num_nodes: int,
    arc_list: list[tuple[int, int]] | np.ndarray,
    directed: bool,
    node_ids: np.ndarray,
) -> TrustGraph:
    if len(arc_list) == 0:
        indptr = np.zeros(num_nodes + 1, dtype=np.int64)
        return TrustGraph(num_nodes, indptr, np.empty(0, dtype=np.int64), directed, node_ids)
    arr = np.asarray(arc_list, dtype=np.int64)
    order = np.lexsort((arr[:, 1], arr[:, 0]))
    arr = arr[order]
    indptr = np.zeros(num_nodes + 1, dtype=np.int64)
    np.add.at(indptr, arr[:, 0] + 1, 1)
    indptr = np.cumsum(indptr)
    return TrustGraph(num_nodes, indptr, arr[:, 1].copy(), directed, node_ids)


def to_undirected(g: TrustGraph) -> TrustGraph:
    """Symmetrize: edge u-v present iff arc (u,v) or (v,u) was present."""
    n = g.num_nodes
    if g.num_arcs == 0:
        return TrustGraph(n, g.indptr.copy(), g.indices.copy(), False, g.node_ids)
    src = np.repeat(np.arange(n, dtype=np.int64), np.diff(g.indptr))
    dst = g.indices
    both_src = np.concatenate([src, dst])
    both_dst = np.concatenate([dst, src])
    # dedup arcs via a single sort over encoded pairs
    code = both_src * n + both_dst
    code = np.unique(code)
    arr = np.stack([code // n, code % n], axis=1)
    return _graph_from_arcs(n, arr, directed=False, node_ids=g.node_ids)


def align_users(ratings: RatingsMatrix, graph: TrustGraph) -> tuple[RatingsMatrix, TrustGraph]:
    """Re-index both structures onto the shared user universe.

    The universe is the union of rating users and trust nodes, ordered by
    ascending external id. Users present only in ratings become isolated
    graph nodes; users present only in trust get empty rating rows.
    """
    universe = np.union1d(ratings.user_ids, graph.node_ids)
    index = {int(e): i for i, e in enumerate(universe)}
    n = universe.shape[0]

    # remap ratings rows
    row_of = np.array([index[int(e)] for e in ratings.user_ids], dtype=np.int64)
    counts = np.diff(ratings.user_ptr)
    new_users = np.repeat(row_of, counts)
    order = np.lexsort((ratings.item_idx, new_users))
    items = ratings.item_idx[order]
    vals = ratings.values[order]
    user_ptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(user_ptr, new_users[order] + 1, 1)
    user_ptr = np.cumsum(user_ptr)
    new_ratings = RatingsMatrix(
        n, ratings.num_items, user_ptr, items, vals, universe, ratings.item_ids
    )

    # remap graph nodes
    node_of = np.array([index[int(e)] for e in graph.node_ids], dtype=np.int64)
    src = np.repeat(np.arange(graph.num_nodes, dtype=np.int64), np.diff(graph.indptr))
    arcs = np.stack([node_of[src], node_of[graph.indices]], axis=1)
    new_graph = _graph_from_arcs(n, arcs, directed=graph.directed, node_ids=universe)
    return new_ratings, new_graph


def split_users(
    r: RatingsMatrix,
    g: TrustGraph,
    threshold: int = 10,
    trust_degree: str = "any",
) -> SplitSpec:
    """Partition rating users into warm (> threshold ratings) and cold.

    Validation users are warm users with a trust connection, test users
    cold ones. ``trust_degree`` selects which connections count:
    ``"any"`` (in or out), ``"out"`` or ``"in"``.
    """
    if r.num_users != g.num_nodes:
        raise DataError(
            f"ratings ({r.num_users} users) and graph ({g.num_nodes} nodes) "
            "do not share an id universe; call align_users first"
        )
    counts = r.ratings_per_user()
    rated = counts >= 1
    warm = counts > threshold
    cold = rated & ~warm

    out_deg = np.diff(g.indptr)
    in_deg = np.bincount(g.indices, minlength=g.num_nodes) if g.directed else out_deg
    if trust_degree == "any":
        trusted = (out_deg + in_deg) > 0
    elif trust_degree == "out":
        trusted = out_deg > 0
    elif trust_degree == "in":
        trusted = in_deg > 0
    else:
        raise DataError(f"unknown trust_degree {trust_degree!r}")

    idx = np.arange(r.num_users, dtype=np.int64)
    return SplitSpec(
        warm_users=idx[warm],
        cold_users=idx[cold],
        validation_users=idx[warm & trusted],
        test_users=idx[cold & trusted],
        threshold=threshold,
    )


def restrict_to_users(r: RatingsMatrix, users: np.ndarray) -> RatingsMatrix:
    """Ratings matrix keeping only the rows of ``users`` (others emptied).

    Shape and id maps are unchanged, so indices remain aligned; item
    popularity reflects the kept rows only.
    """
    keep = np.zeros(r.num_users, dtype=bool)
    keep[np.asarray(users, dtype=np.int64)] = True
    counts = np.diff(r.user_ptr)
    row = np.repeat(np.arange(r.num_users, dtype=np.int64), counts)
    mask = keep[row]
    items = r.item_idx[mask]
    vals = r.values[mask]
    user_ptr = np.zeros(r.num_users + 1, dtype=np.int64)
    np.add.at(user_ptr, row[mask] + 1, 1)
    user_ptr = np.cumsum(user_ptr)
    return RatingsMatrix(
        r.num_users, r.num_items, user_ptr, items, vals, r.user_ids, r.item_ids
    )
