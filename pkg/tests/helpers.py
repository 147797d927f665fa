"""Small builders shared across test modules."""

import numpy as np

from trustcf.datasets import RatingsMatrix, TrustGraph


def graph_from_arcs(arcs, n, directed=True, node_ids=None):
    """CSR TrustGraph from explicit (src, dst) dense-index pairs."""
    if node_ids is None:
        node_ids = np.arange(1, n + 1, dtype=np.int64)
    if not arcs:
        indptr = np.zeros(n + 1, dtype=np.int64)
        return TrustGraph(n, indptr, np.empty(0, dtype=np.int64), directed, node_ids)
    src = np.array([a for a, _ in arcs], dtype=np.int64)
    dst = np.array([b for _, b in arcs], dtype=np.int64)
    order = np.lexsort((dst, src))
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(indptr, src + 1, 1)
    indptr = np.cumsum(indptr)
    return TrustGraph(n, indptr.astype(np.int64), dst[order], directed, node_ids)


def undirected_graph(pairs, n, node_ids=None):
    both = []
    for a, b in pairs:
        both.append((a, b))
        both.append((b, a))
    return graph_from_arcs(sorted(set(both)), n, directed=False, node_ids=node_ids)


def random_undirected(n, num_pairs, seed=0):
    rng = np.random.default_rng(seed)
    pairs = set()
    while len(pairs) < num_pairs:
        a, b = (int(x) for x in rng.integers(0, n, 2))
        if a != b:
            pairs.add((min(a, b), max(a, b)))
    return undirected_graph(sorted(pairs), n)


def adjacency(g):
    a = np.zeros((g.num_nodes, g.num_nodes))
    for u in range(g.num_nodes):
        for v in g.neighbors(u):
            a[u, v] = 1.0
    return a


def ratings_from_rows(rows, n_items, user_ids=None, item_ids=None):
    """RatingsMatrix from a list of per-user [(item_idx, value), ...] lists."""
    user_ptr = [0]
    item_idx = []
    values = []
    for entries in rows:
        for i, v in sorted(entries):
            item_idx.append(i)
            values.append(v)
        user_ptr.append(len(item_idx))
    if user_ids is None:
        user_ids = np.arange(1, len(rows) + 1, dtype=np.int64)
    if item_ids is None:
        item_ids = np.arange(1, n_items + 1, dtype=np.int64)
    return RatingsMatrix(
        len(rows),
        n_items,
        np.array(user_ptr, dtype=np.int64),
        np.array(item_idx, dtype=np.int64),
        np.array(values, dtype=np.float64),
        np.asarray(user_ids, dtype=np.int64),
        np.asarray(item_ids, dtype=np.int64),
    )


def write_synth_dataset(dirpath, seed=11):
    """Fixed synthetic benchmark files with hand-checkable split counts.

    Users 1..18 rate 11+ items (warm at threshold 10), 19..26 rate 1..8
    items (cold), 27..30 appear only in the trust file. Trust arcs give
    every warm user a connection; cold users 19..22 are connected,
    23..26 are isolated in the network.
    """
    rng = np.random.default_rng(seed)
    n_items = 50
    ratings_path = str(dirpath / "ratings.txt")
    trust_path = str(dirpath / "trust.txt")

    lines = []
    for u in range(1, 19):
        items = rng.choice(n_items, size=11 + int(rng.integers(0, 5)), replace=False)
        for i in items:
            lines.append(f"{u} {i + 1} {int(rng.integers(1, 9)) / 2.0}")
    for u in range(19, 27):
        items = rng.choice(n_items, size=int(rng.integers(1, 9)), replace=False)
        for i in items:
            lines.append(f"{u} {i + 1} {int(rng.integers(1, 9)) / 2.0}")
    with open(ratings_path, "w") as fh:
        fh.write("\n".join(lines) + "\n")

    arcs = set()
    connected = list(range(1, 23)) + list(range(27, 31))
    for u in connected:
        v = int(rng.choice([w for w in connected if w != u]))
        arcs.add((u, v))
    while len(arcs) < 90:
        a, b = (int(x) for x in rng.choice(connected, 2))
        if a != b:
            arcs.add((a, b))
    with open(trust_path, "w") as fh:
        for a, b in sorted(arcs):
            fh.write(f"{a} {b} 1\n")
    return ratings_path, trust_path


# hand-derived from the construction above
SYNTH_WARM = 18
SYNTH_COLD = 8
SYNTH_VALIDATION = 18
SYNTH_TEST = 4
SYNTH_UNIVERSE = 30
