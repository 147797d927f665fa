import io

import numpy as np
import pytest

from helpers import (
    SYNTH_COLD,
    SYNTH_TEST,
    SYNTH_UNIVERSE,
    SYNTH_VALIDATION,
    SYNTH_WARM,
    graph_from_arcs,
    undirected_graph,
)
from trustcf.datasets import (
    RATING_PRESETS,
    RatingFormat,
    TrustFormat,
    align_users,
    load_ratings,
    load_trust,
    restrict_to_users,
    split_users,
    to_undirected,
)
from trustcf.errors import DataError, DataFormatError


def test_load_ratings_basic():
    src = io.StringIO("1 10 4.0\n2 10 3.5\n1 11 2.0\n")
    r, report = load_ratings(src)
    assert r.num_users == 2 and r.num_items == 2
    assert report.records_read == 3 and report.records_dropped == 0
    # external ids preserved, dense rows ordered by first appearance
    assert list(r.user_ids) == [1, 2]
    assert list(r.item_ids) == [10, 11]
    np.testing.assert_allclose(r.user_items(0)[1], [4.0, 2.0])


def test_load_ratings_drops_and_duplicates():
    src = io.StringIO("1 10 4.0\n1 10 1.0\n2 11 0\n2 12 -3\n")
    r, report = load_ratings(src)
    # duplicate keeps the last value; non-positive ratings dropped
    items, vals = r.user_items(0)
    assert vals.tolist() == [1.0]
    assert report.reasons == {"duplicate": 1, "non_positive_rating": 2}


def test_load_ratings_malformed_line():
    with pytest.raises(DataFormatError, match="line 2"):
        load_ratings(io.StringIO("1 10 4.0\n1 10\n"))
    with pytest.raises(DataFormatError, match="rating"):
        load_ratings(io.StringIO("1 10 abc\n"))


def test_ciao_preset_column_layout():
    fmt = RATING_PRESETS["ciao"]
    src = io.StringIO("5,77,9,9,3.0\n")
    r, _ = load_ratings(src, fmt)
    assert list(r.user_ids) == [5] and list(r.item_ids) == [77]
    assert r.values.tolist() == [3.0]


def test_load_trust_dedup_and_self_loops():
    src = io.StringIO("1 2 1\n2 1 1\n1 2 1\n3 3 1\n")
    g, report = load_trust(src)
    assert g.directed
    assert g.num_arcs == 2
    assert report.reasons == {"duplicate": 1, "self_loop": 1}
    # node 3 still registered even though its only record was dropped
    assert g.num_nodes == 3


def test_to_undirected_symmetry():
    g = graph_from_arcs([(0, 1), (2, 1)], 3, directed=True)
    u = to_undirected(g)
    assert not u.directed
    assert set(u.neighbors(1).tolist()) == {0, 2}
    assert u.neighbors(0).tolist() == [1]
    assert u.num_edges == 2
    assert u.num_arcs == 4


def test_to_undirected_counts_reciprocal_once():
    g = graph_from_arcs([(0, 1), (1, 0)], 2, directed=True)
    u = to_undirected(g)
    assert u.num_edges == 1


def test_align_users_union_universe():
    r, _ = load_ratings(io.StringIO("7 1 3.0\n3 1 2.0\n"))
    g, _ = load_trust(io.StringIO("3 9 1\n"))
    ra, ga = align_users(r, g)
    assert list(ra.user_ids) == [3, 7, 9]
    assert list(ga.node_ids) == [3, 7, 9]
    # trust-only user 9 has an empty rating row
    items, _ = ra.user_items(2)
    assert items.size == 0
    # rating-only user 7 is isolated in the graph
    assert ga.neighbors(1).size == 0


def test_split_users_threshold_boundary():
    rows = [[(i, 1.0) for i in range(11)], [(i, 1.0) for i in range(10)], []]
    from helpers import ratings_from_rows

    r = ratings_from_rows(rows, 12)
    g = undirected_graph([(0, 1)], 3)
    s = split_users(r, g, threshold=10)
    # strictly more than threshold ratings is warm; 10 is still cold
    assert s.warm_users.tolist() == [0]
    assert s.cold_users.tolist() == [1]
    assert s.validation_users.tolist() == [0]
    assert s.test_users.tolist() == [1]
    assert s.counts() == {"warm": 1, "cold": 1, "validation": 1, "test": 1}


def test_split_users_trust_degree_direction():
    from helpers import ratings_from_rows

    rows = [[(0, 1.0)], [(1, 1.0)]]
    r = ratings_from_rows(rows, 2)
    g = graph_from_arcs([(0, 1)], 2, directed=True)
    any_side = split_users(r, g, threshold=0, trust_degree="any")
    out_side = split_users(r, g, threshold=0, trust_degree="out")
    in_side = split_users(r, g, threshold=0, trust_degree="in")
    assert any_side.validation_users.tolist() == [0, 1]
    assert out_side.validation_users.tolist() == [0]
    assert in_side.validation_users.tolist() == [1]
    with pytest.raises(DataError):
        split_users(r, g, trust_degree="sideways")


def test_split_users_requires_alignment():
    from helpers import ratings_from_rows

    r = ratings_from_rows([[(0, 1.0)]], 1)
    g = undirected_graph([(0, 1)], 3)
    with pytest.raises(DataError, match="align"):
        split_users(r, g)


def test_restrict_to_users_keeps_only_listed_rows():
    from helpers import ratings_from_rows

    r = ratings_from_rows([[(0, 5.0)], [(1, 4.0)], [(2, 3.0)]], 3)
    view = restrict_to_users(r, np.array([1]))
    assert view.user_items(0)[0].size == 0
    assert view.user_items(1)[1].tolist() == [4.0]
    assert view.user_items(2)[0].size == 0
    # original untouched
    assert r.user_items(0)[1].tolist() == [5.0]
    # popularity recomputed on the view
    assert view.item_pop.tolist() == [0, 1, 0]


def test_synthetic_split_counts(synth_files):
    ratings_path, trust_path = synth_files
    r, _ = load_ratings(ratings_path)
    g, _ = load_trust(trust_path)
    r, g = align_users(r, to_undirected(g))
    assert r.num_users == SYNTH_UNIVERSE
    s = split_users(r, g, threshold=10)
    assert s.counts() == {
        "warm": SYNTH_WARM,
        "cold": SYNTH_COLD,
        "validation": SYNTH_VALIDATION,
        "test": SYNTH_TEST,
    }


def test_graph_neighbor_invariants():
    g = undirected_graph([(0, 1), (0, 2), (1, 2), (2, 3)], 5)
    for u in range(5):
        nbrs = g.neighbors(u)
        assert np.all(np.diff(nbrs) > 0)
        assert u not in nbrs
    assert g.degrees().tolist() == [2, 2, 3, 1, 0]
    sp = g.to_scipy()
    assert (sp != sp.T).nnz == 0
