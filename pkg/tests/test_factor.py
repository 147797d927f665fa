import numpy as np
import pytest
import scipy.sparse as sp

from helpers import adjacency, random_undirected, undirected_graph
from trustcf.embeddings.factor import (
    AdamicAdar,
    CommonNeighbors,
    Katz,
    RootedPageRank,
    _proximity_operator,
    _series_horizon,
    gf_gradient,
    gf_objective,
    graph_factorization,
    grarep,
    hope,
    laplacian_eigenmaps,
    locally_linear_embedding,
    log_shifted_transition,
)
from trustcf.errors import ConfigError, DataError, NumericalError


# --- graph factorization ---

def test_gf_gradient_matches_central_differences():
    rng = np.random.default_rng(1)
    g = random_undirected(8, 12, seed=1)
    src = np.repeat(np.arange(8), np.diff(g.indptr))
    dst = g.indices
    keep = src < dst
    src, dst = src[keep], dst[keep]
    y = rng.normal(size=(8, 4))
    grad = gf_gradient(y, src, dst, reg=0.3)
    eps = 1e-6
    fd = np.zeros_like(y)
    for i in range(8):
        for j in range(4):
            yp = y.copy()
            yp[i, j] += eps
            ym = y.copy()
            ym[i, j] -= eps
            fd[i, j] = (
                gf_objective(yp, src, dst, 0.3) - gf_objective(ym, src, dst, 0.3)
            ) / (2 * eps)
    rel = np.abs(grad - fd).max() / np.abs(fd).max()
    assert rel < 1e-4


def test_gf_single_edge_learns_dot_near_one():
    g = undirected_graph([(0, 1)], 2)
    emb = graph_factorization(g, dim=4, lr=0.05, reg=0.0, epochs=200, seed=0)
    dot = float(emb.values[0] @ emb.values[1])
    assert 0.8 <= dot <= 1.0 + 1e-9


def test_gf_objective_decreases():
    g = random_undirected(20, 40, seed=2)
    emb = graph_factorization(g, dim=8, lr=0.02, reg=0.01, epochs=20, seed=0)
    hist = emb.meta["objective"]
    assert hist[-1] < hist[0]


def test_gf_regularizer_shrinks_without_edges():
    g = undirected_graph([], 3)
    emb = graph_factorization(g, dim=4, lr=0.1, reg=1.0, epochs=10, seed=0)
    # every node is isolated, so rows are zeroed on output
    assert np.all(emb.values == 0)


def test_gf_determinism_and_divergence():
    g = random_undirected(15, 30, seed=3)
    a = graph_factorization(g, dim=6, epochs=5, seed=4)
    b = graph_factorization(g, dim=6, epochs=5, seed=4)
    np.testing.assert_array_equal(a.values, b.values)
    with pytest.raises(NumericalError):
        graph_factorization(g, dim=6, lr=50.0, reg=0.0, epochs=50, seed=0)
    with pytest.raises(ConfigError):
        # lr*reg >= 1 would flip the ridge decay sign
        graph_factorization(g, dim=6, lr=2.0, reg=0.6, epochs=2, seed=0)


# --- spectral methods ---

def test_laplacian_eigenmaps_path_spectrum():
    # normalized Laplacian of the 3-path has eigenvalues {0, 1, 2}; the
    # trivial 0 is dropped
    g = undirected_graph([(0, 1), (1, 2)], 3)
    emb = laplacian_eigenmaps(g, dim=2)
    np.testing.assert_allclose(emb.meta["eigenvalues"], [1.0, 2.0], atol=1e-9)
    assert emb.values.shape == (3, 2)


def test_laplacian_eigenmaps_matches_dense_eigh():
    g = random_undirected(25, 60, seed=5)
    emb = laplacian_eigenmaps(g, dim=4)
    a = adjacency(g)
    deg = a.sum(1)
    d_isqrt = np.where(deg > 0, deg, 1.0) ** -0.5
    lsym = np.eye(25) - d_isqrt[:, None] * a * d_isqrt[None, :]
    ref = np.linalg.eigvalsh(lsym)[1:5]
    np.testing.assert_allclose(emb.meta["eigenvalues"], ref, atol=1e-8)


def test_lle_matches_dense_eigh():
    g = random_undirected(20, 45, seed=6)
    emb = locally_linear_embedding(g, dim=3)
    a = adjacency(g)
    deg = a.sum(1)
    w = a / np.where(deg > 0, deg, 1.0)[:, None]
    m = (np.eye(20) - w).T @ (np.eye(20) - w)
    ref = np.linalg.eigvalsh(m)[1:4]
    np.testing.assert_allclose(emb.meta["eigenvalues"], ref, atol=1e-8)


def test_spectral_isolated_nodes_get_zero_rows():
    g = undirected_graph([(0, 1), (1, 2), (0, 2)], 5)
    emb = laplacian_eigenmaps(g, dim=2)
    assert np.all(emb.values[3] == 0) and np.all(emb.values[4] == 0)


# --- HOPE ---

def test_katz_operator_matches_dense_inverse():
    g = random_undirected(30, 70, seed=7)
    a = adjacency(g)
    beta = 0.05
    ref = np.linalg.inv(np.eye(30) - beta * a) - np.eye(30)
    apply, meta = _proximity_operator(g, Katz(beta))
    assert np.abs(apply(np.eye(30)) - ref).max() < 1e-8


def test_katz_divergent_beta_rejected():
    g = undirected_graph([(0, 1), (1, 2), (0, 2)], 3)
    with pytest.raises(ConfigError, match="diverges"):
        _proximity_operator(g, Katz(0.6))


def test_rooted_pagerank_operator_matches_closed_form():
    g = random_undirected(18, 40, seed=8)
    a = adjacency(g)
    deg = a.sum(1)
    p = a / np.where(deg > 0, deg, 1.0)[:, None]
    alpha = 0.3
    ref = (1 - alpha) * np.linalg.inv(np.eye(18) - alpha * p)
    (apply, apply_t), _ = _proximity_operator(g, RootedPageRank(alpha))
    assert np.abs(apply(np.eye(18)) - ref).max() < 1e-10
    assert np.abs(apply_t(np.eye(18)) - ref.T).max() < 1e-10


def test_common_neighbors_triangle():
    g = undirected_graph([(0, 1), (1, 2), (0, 2)], 3)
    apply, _ = _proximity_operator(g, CommonNeighbors())
    s = apply(np.eye(3))
    np.testing.assert_allclose(np.diag(s), [2, 2, 2])
    np.testing.assert_allclose(s, adjacency(g) @ adjacency(g))


def test_adamic_adar_matches_dense():
    g = random_undirected(16, 30, seed=9)
    a = adjacency(g)
    deg = a.sum(1)
    w = np.where(deg >= 2, 1.0 / np.log(np.where(deg >= 2, deg, 2.0)), 0.0)
    ref = a @ np.diag(w) @ a
    apply, _ = _proximity_operator(g, AdamicAdar())
    assert np.abs(apply(np.eye(16)) - ref).max() < 1e-12


def test_hope_reconstruction_is_optimal_rank_k():
    g = random_undirected(24, 55, seed=10)
    a = adjacency(g)
    beta = 0.04
    s_mat = np.linalg.inv(np.eye(24) - beta * a) - np.eye(24)
    emb = hope(g, dim=8, proximity=Katz(beta), seed=0)
    u_part, v_part = emb.values[:, :4], emb.values[:, 4:]
    u, s, vt = np.linalg.svd(s_mat)
    best = (u[:, :4] * s[:4]) @ vt[:4]
    assert np.abs(u_part @ v_part.T - best).max() < 1e-9


def test_hope_odd_dim_rejected():
    g = undirected_graph([(0, 1)], 2)
    with pytest.raises(ConfigError):
        hope(g, dim=7)


def test_hope_operator_route_agrees_with_dense_route():
    # same graph through the materialized path (default) and the
    # matrix-free path; singular values must agree
    from trustcf.embeddings import factor

    g = random_undirected(40, 90, seed=11)
    dense_emb = hope(g, dim=8, proximity=Katz(0.03), seed=0)
    limit = factor._DENSE_LIMIT
    try:
        factor._DENSE_LIMIT = 4
        op_emb = hope(g, dim=8, proximity=Katz(0.03), seed=0)
    finally:
        factor._DENSE_LIMIT = limit
    np.testing.assert_allclose(
        dense_emb.meta["singular_values"], op_emb.meta["singular_values"], rtol=1e-6
    )


def test_series_horizon_tail_bound():
    for ratio in (0.1, 0.5, 0.9):
        h = _series_horizon(ratio, tol=1e-12)
        # geometric tail after h terms is below tolerance
        assert ratio ** h / (1 - ratio) <= 1e-12 * 10
        assert ratio ** (h - 5) / (1 - ratio) > 1e-12


# --- GraRep ---

def test_log_shifted_transition_matches_dense():
    m = sp.random(9, 9, density=0.4, random_state=3, format="csr")
    out = log_shifted_transition(m.copy(), 9)
    d = m.toarray()
    cs = d.sum(0)
    cs[cs == 0] = 1.0
    t = d / cs
    with np.errstate(divide="ignore"):
        ref = np.where(t > 0, np.log(np.where(t > 0, t, 1.0)) + np.log(9), 0.0)
    ref[ref < 0] = 0.0
    np.testing.assert_allclose(out.toarray(), ref, atol=1e-12)


def test_grarep_dim_divisibility():
    g = undirected_graph([(0, 1)], 2)
    with pytest.raises(ConfigError):
        grarep(g, dim=10, max_order=3)


def test_grarep_order_one_matches_direct_svd():
    g = random_undirected(20, 45, seed=12)
    emb = grarep(g, dim=6, max_order=1, seed=0)
    a = adjacency(g)
    deg = a.sum(1)
    p = sp.csr_matrix(a / np.where(deg > 0, deg, 1.0)[:, None])
    x = log_shifted_transition(p, 20).toarray()
    u, s, vt = np.linalg.svd(x)
    ref = u[:, :6] * np.sqrt(s[:6])
    # sign convention may differ per column
    got = emb.values
    for j in range(6):
        col_match = np.allclose(got[:, j], ref[:, j], atol=1e-8) or np.allclose(
            got[:, j], -ref[:, j], atol=1e-8
        )
        assert col_match


def test_grarep_concatenates_orders():
    g = random_undirected(15, 30, seed=13)
    emb = grarep(g, dim=8, max_order=4, seed=0)
    assert emb.values.shape == (15, 8)
    assert emb.meta["params"]["max_order"] == 4
