import numpy as np
import pytest

from helpers import graph_from_arcs, random_undirected, undirected_graph
from trustcf.embeddings.methods import deepwalk, line_embedding, node2vec, role2vec
from trustcf.embeddings.sgns import SgnsConfig
from trustcf.embeddings.walks import RoleConfig, WalkConfig
from trustcf.errors import ConfigError, DataError

SMALL_WALK = WalkConfig(num_walks=3, walk_length=8, seed=0)
SMALL_SGNS = SgnsConfig(dim=8, window=3, negatives=3, epochs=1, seed=0)


def test_deepwalk_shape_and_determinism():
    g = random_undirected(20, 40, seed=0)
    a = deepwalk(g, walk_cfg=SMALL_WALK, sgns_cfg=SMALL_SGNS)
    b = deepwalk(g, walk_cfg=SMALL_WALK, sgns_cfg=SMALL_SGNS)
    assert a.values.shape == (20, 8)
    np.testing.assert_array_equal(a.values, b.values)
    assert a.meta["method"] == "deepwalk"


def test_deepwalk_ignores_bias_setting():
    g = random_undirected(15, 30, seed=1)
    biased = WalkConfig(num_walks=3, walk_length=8, bias="second_order", p=9.0, q=0.1, seed=0)
    uniform = WalkConfig(num_walks=3, walk_length=8, seed=0)
    a = deepwalk(g, walk_cfg=biased, sgns_cfg=SMALL_SGNS)
    b = deepwalk(g, walk_cfg=uniform, sgns_cfg=SMALL_SGNS)
    np.testing.assert_array_equal(a.values, b.values)


def test_node2vec_p_q_change_embedding():
    g = random_undirected(20, 40, seed=2)
    a = node2vec(g, p=1.0, q=1.0, walk_cfg=SMALL_WALK, sgns_cfg=SMALL_SGNS)
    b = node2vec(g, p=0.25, q=4.0, walk_cfg=SMALL_WALK, sgns_cfg=SMALL_SGNS)
    assert not np.array_equal(a.values, b.values)
    assert a.meta["params"]["p"] == 1.0
    assert b.meta["params"]["q"] == 4.0


def test_role2vec_meta_and_determinism():
    g = random_undirected(25, 50, seed=3)
    role_cfg = RoleConfig(feature_kind="wl_degree", num_clusters=5)
    a = role2vec(g, role_cfg=role_cfg, walk_cfg=SMALL_WALK, sgns_cfg=SMALL_SGNS)
    b = role2vec(g, role_cfg=role_cfg, walk_cfg=SMALL_WALK, sgns_cfg=SMALL_SGNS)
    np.testing.assert_array_equal(a.values, b.values)
    assert a.meta["params"]["num_clusters"] == 5
    assert a.meta["params"]["num_roles"] <= 5


def test_role2vec_motif_features_accepted():
    g = random_undirected(25, 50, seed=4)
    emb = role2vec(
        g,
        role_cfg=RoleConfig(feature_kind="motif3", num_clusters=4),
        walk_cfg=SMALL_WALK,
        sgns_cfg=SMALL_SGNS,
    )
    assert emb.values.shape == (25, 8)


def test_line_first_order_ties_tables():
    g = random_undirected(20, 40, seed=5)
    emb = line_embedding(g, dim=8, order="first", samples=4000, seed=0)
    assert emb.values.shape == (20, 8)
    assert emb.meta["params"]["order"] == "first"


def test_line_second_order_and_determinism():
    g = random_undirected(20, 40, seed=6)
    a = line_embedding(g, dim=8, order="second", samples=4000, seed=1)
    b = line_embedding(g, dim=8, order="second", samples=4000, seed=1)
    np.testing.assert_array_equal(a.values, b.values)
    c = line_embedding(g, dim=8, order="second", samples=4000, seed=2)
    assert not np.array_equal(a.values, c.values)


def test_line_rejects_directed_and_empty():
    with pytest.raises(ConfigError):
        line_embedding(graph_from_arcs([(0, 1)], 2, directed=True), dim=4)
    with pytest.raises(DataError):
        line_embedding(undirected_graph([], 3), dim=4)
    with pytest.raises(ConfigError):
        line_embedding(undirected_graph([(0, 1)], 2), dim=4, order="third")


def test_isolated_nodes_zeroed_across_methods():
    g = undirected_graph([(0, 1), (1, 2)], 5)
    for emb in (
        deepwalk(g, walk_cfg=SMALL_WALK, sgns_cfg=SMALL_SGNS),
        node2vec(g, p=0.5, q=2.0, walk_cfg=SMALL_WALK, sgns_cfg=SMALL_SGNS),
        line_embedding(g, dim=8, samples=2000, seed=0),
    ):
        assert np.all(emb.values[3] == 0)
        assert np.all(emb.values[4] == 0)
