import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import graph_from_arcs, ratings_from_rows, undirected_graph
from trustcf.errors import ConfigError
from trustcf.recommend import (
    NeighborList,
    _top_by_value,
    dump_recommendations,
    knn_from_embedding,
    most_popular,
    neighbors_direct,
    neighbors_jaccard,
    neighbors_katz,
    neighbors_undirected,
    popularity_ranking,
    score_items,
)


def brute_top_k(values, k):
    """Reference: stable sort by (-value, index), finite entries only."""
    idx = np.arange(values.size)
    finite = np.isfinite(values)
    idx = idx[finite]
    order = np.lexsort((idx, -values[finite]))
    return idx[order][:k]


def test_top_by_value_tie_cases():
    vals = np.array([3.0, 1.0, 3.0, 2.0, 3.0])
    idx, out = _top_by_value(vals, 2)
    # three tied maxima: lowest indices win
    assert idx.tolist() == [0, 2]
    assert out.tolist() == [3.0, 3.0]
    idx, _ = _top_by_value(vals, 4)
    assert idx.tolist() == [0, 2, 4, 3]


def test_top_by_value_ignores_non_finite():
    # inf is used as a mask value by callers, so only finite entries rank
    vals = np.array([np.nan, -np.inf, 2.0, np.inf])
    idx, out = _top_by_value(vals, 3)
    assert idx.tolist() == [2]
    assert out.tolist() == [2.0]


@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.floats(min_value=-1e6, max_value=1e6, allow_nan=False), min_size=0, max_size=40),
    st.integers(min_value=1, max_value=50),
)
def test_top_by_value_matches_brute_force(vals, k):
    vals = np.array(vals, dtype=np.float64)
    idx, out = _top_by_value(vals, k)
    ref = brute_top_k(vals, k)
    assert idx.tolist() == ref.tolist()
    np.testing.assert_array_equal(out, vals[ref])


def test_knn_matches_exhaustive_cosine():
    rng = np.random.default_rng(0)
    n = 200
    emb = rng.normal(size=(n, 16))
    emb[7] = 0.0  # zero vector target must yield an empty list
    targets = np.arange(0, n, 3)
    lists = knn_from_embedding(emb, targets, k=12)
    norms = np.linalg.norm(emb, axis=1)
    unit = np.divide(emb, norms[:, None], out=np.zeros_like(emb), where=norms[:, None] > 0)
    sims_all = unit @ unit.T
    for nl, t in zip(lists, targets):
        assert nl.target == t
        if norms[t] == 0:
            assert len(nl) == 0
            continue
        sims = sims_all[t].copy()
        sims[t] = -np.inf
        sims[norms == 0] = -np.inf
        ref = brute_top_k(sims, 12)
        assert nl.neighbors.tolist() == ref.tolist()
        np.testing.assert_allclose(nl.similarities, sims[ref], atol=1e-12)


def test_knn_keeps_negative_cosines():
    emb = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0]])
    nl = knn_from_embedding(emb, np.array([0]), k=2)[0]
    assert nl.neighbors.tolist() == [2, 1]
    np.testing.assert_allclose(nl.similarities, [0.0, -1.0], atol=1e-12)


def test_neighbors_direct_out_and_in():
    g = graph_from_arcs([(0, 1), (2, 0)], 3, directed=True)
    out_nl = neighbors_direct(g, np.array([0]), k=5, direction="out")[0]
    in_nl = neighbors_direct(g, np.array([0]), k=5, direction="in")[0]
    assert out_nl.neighbors.tolist() == [1]
    assert in_nl.neighbors.tolist() == [2]
    np.testing.assert_allclose(out_nl.similarities, [1.0])


def test_neighbors_undirected_unit_similarity():
    g = undirected_graph([(0, 1), (0, 2)], 3)
    nl = neighbors_undirected(g, np.array([0]), k=5)[0]
    assert nl.neighbors.tolist() == [1, 2]
    np.testing.assert_allclose(nl.similarities, [1.0, 1.0])


def test_neighbors_jaccard_path_and_triangle():
    g = undirected_graph([(0, 1), (1, 2)], 3)
    nl = neighbors_jaccard(g, np.array([0]), k=5)[0]
    # only 2-hop reachable candidate is 2, sharing neighbor 1 exactly
    assert nl.neighbors.tolist() == [2]
    np.testing.assert_allclose(nl.similarities, [1.0])

    g2 = undirected_graph([(0, 1), (1, 2), (0, 2), (2, 3)], 4)
    nl2 = neighbors_jaccard(g2, np.array([0]), k=5)[0]
    assert nl2.neighbors.tolist() == [3, 1, 2]
    np.testing.assert_allclose(nl2.similarities, [0.5, 1 / 3, 0.25])


def test_neighbors_katz_matches_truncated_series():
    g = undirected_graph([(0, 1), (1, 2)], 3)
    nl = neighbors_katz(g, np.array([0]), k=5, alpha=0.1, horizon=50)[0]
    a = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=float)
    s = np.zeros((3, 3))
    term = np.eye(3)
    for _ in range(50):
        term = 0.1 * (term @ a)
        s += term
    ref = brute_top_k(np.where(s[0] > 0, s[0], -np.inf), 5)
    ref = ref[ref != 0]
    assert nl.neighbors.tolist() == [1, 2]
    np.testing.assert_allclose(nl.similarities, s[0][[1, 2]], atol=1e-12)


def test_neighbors_katz_divergent_alpha():
    g = undirected_graph([(0, 1), (1, 2), (0, 2)], 3)
    with pytest.raises(ConfigError):
        neighbors_katz(g, np.array([0]), k=2, alpha=0.9)


def test_score_items_weighted_sum():
    # neighbor sims 0.8 and 0.5 rate the same item 5 and 3: 0.8*5+0.5*3
    r = ratings_from_rows([[(0, 5.0)], [(0, 3.0)], []], 2)
    nl = NeighborList(2, np.array([0, 1]), np.array([0.8, 0.5]))
    recs = score_items([nl], r, n=3)
    assert recs[0].items.tolist() == [0]
    np.testing.assert_allclose(recs[0].scores, [5.5])


def test_score_items_excludes_and_breaks_ties_by_item():
    r = ratings_from_rows([[(0, 2.0), (1, 2.0), (2, 2.0)]], 3)
    nl = NeighborList(0, np.array([0]), np.array([1.0]))
    recs = score_items([nl], r, n=2, exclude_items={0: np.array([1])})
    assert recs[0].items.tolist() == [0, 2]

    recs_all = score_items([nl], r, n=3)
    assert recs_all[0].items.tolist() == [0, 1, 2]


def test_score_items_empty_neighborhood():
    r = ratings_from_rows([[(0, 5.0)]], 1)
    recs = score_items([NeighborList(0)], r, n=3)
    assert len(recs[0]) == 0


def test_popularity_ranking_and_most_popular():
    # item 1 rated twice, items 0/2 once; ties resolve to the lower index
    r = ratings_from_rows([[(0, 4.0), (1, 5.0)], [(1, 3.0), (2, 2.0)]], 3)
    ranked = popularity_ranking(r)
    assert ranked.tolist() == [1, 0, 2]
    mp = most_popular(r, n=2)
    assert mp.items.tolist() == [1, 0]
    np.testing.assert_allclose(mp.scores, [2.0, 1.0])


def test_dump_recommendations_external_ids(tmp_path):
    r = ratings_from_rows([[(0, 5.0)], [(0, 3.0)], []], 2,
                          user_ids=[100, 200, 300], item_ids=[77, 88])
    from trustcf.recommend import RecommendationList

    recs = [RecommendationList(2, np.array([0]), np.array([5.5]))]
    g = undirected_graph([(0, 2), (1, 2)], 3, node_ids=np.array([100, 200, 300]))
    out = tmp_path / "recs.txt"
    dump_recommendations(recs, r, g, str(out))
    line = out.read_text().strip()
    assert line.split() == ["300", "77", "1", "5.5"]
