import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sparse_diffusion.analysis import block_max_norm_matrix
from sparse_diffusion.topology import (CombinationMatrices, Topology, block_extend, build_uniform_combiners,
                                       is_connected, load_edge_list, random_geometric_topology, save_edge_list,
                                       validate_combiners)

from conftest import random_left_stochastic


def line3():
    return Topology.from_edges(3, [(0, 1), (1, 2)])


@st.composite
def topologies(draw, max_nodes=8):
    n = draw(st.integers(1, max_nodes))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    edges = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    return Topology.from_edges(n, edges)


def test_single_node_combiners_are_one():
    mats = build_uniform_combiners(Topology.from_edges(1, []))
    assert mats.A.tolist() == [[1.0]]
    assert mats.C.tolist() == [[1.0]]


def test_line_graph_first_column_and_identity_c():
    mats = build_uniform_combiners(line3(), exchange_data=False)
    np.testing.assert_array_equal(mats.A[:, 0], [0.5, 0.5, 0.0])
    np.testing.assert_array_equal(mats.C, np.eye(3))


def test_exchange_data_weights_match_neighborhood_sizes():
    top = line3()
    mats = build_uniform_combiners(top, exchange_data=True)
    # node 1 has three neighbors, nodes 0 and 2 have two
    np.testing.assert_allclose(mats.C[1], 1 / 3)
    np.testing.assert_allclose(mats.C[0], [0.5, 0.5, 0.0])
    assert validate_combiners(mats, top).passed


def test_receiver_normalized_exchange_fails_rows_on_irregular_graph():
    top = line3()
    mats = build_uniform_combiners(top, exchange_data=True, exchange_weights="receiver")
    np.testing.assert_allclose(mats.C[:, 1], 1 / 3)
    rep = validate_combiners(mats, top)
    assert not rep["C row-stochastic"].passed
    assert rep["C sparsity pattern"].passed


def test_twenty_node_generator_is_connected_and_valid():
    top = random_geometric_topology(20, 0.33, np.random.default_rng(0))
    assert top.connected and top.num_nodes == 20
    mats = build_uniform_combiners(top)
    np.testing.assert_allclose(mats.A.sum(axis=0), 1.0, atol=1e-12)
    np.testing.assert_array_equal(mats.C, np.eye(20))
    assert validate_combiners(mats, top).passed


def test_adjacency_symmetric_with_self_loops():
    top = Topology.from_edges(4, [(0, 3)])
    assert np.all(np.diag(top.adjacency))
    assert top.neighbors(0).tolist() == [0, 3]
    assert not top.connected
    with pytest.raises(ValueError):
        Topology(2, np.array([[1, 1], [0, 1]], bool))


def test_identity_passes_on_any_graph():
    top = line3()
    assert validate_combiners(CombinationMatrices.identity(3), top).passed


def test_column_sum_violation_reported():
    top = Topology.from_edges(2, [(0, 1)])
    A = np.array([[0.5, 0.5], [0.4, 0.5]])
    rep = validate_combiners(CombinationMatrices(A, np.eye(2)), top)
    chk = rep["A column-stochastic"]
    assert not chk.passed
    assert chk.max_violation == pytest.approx(0.1)
    assert [c.name for c in rep.failures()] == ["A column-stochastic"]


def test_non_neighbor_weight_is_sparsity_failure():
    top = line3()
    A = np.array([[0.5, 0.0, 0.5], [0.5, 0.5, 0.0], [0.0, 0.5, 0.5]])
    rep = validate_combiners(CombinationMatrices(A, np.eye(3)), top)
    assert not rep["A sparsity pattern"].passed
    assert rep["A column-stochastic"].passed


def test_negative_entry_flagged():
    top = Topology.from_edges(2, [(0, 1)])
    A = np.array([[1.2, 0.5], [-0.2, 0.5]])
    rep = validate_combiners(CombinationMatrices(A, np.eye(2)), top)
    assert rep["A nonnegative"].max_violation == pytest.approx(0.2)


@given(topologies(), st.booleans())
def test_uniform_combiners_always_validate(top, exchange):
    assert validate_combiners(build_uniform_combiners(top, exchange), top).passed


def test_block_extend_identity_and_swap():
    np.testing.assert_array_equal(block_extend(np.eye(3), 2), np.eye(6))
    P = block_extend(np.array([[0, 1], [1, 0]]), 2)
    expected = np.zeros((4, 4))
    expected[0, 2] = expected[1, 3] = expected[2, 0] = expected[3, 1] = 1
    np.testing.assert_array_equal(P, expected)
    with pytest.raises(ValueError):
        block_extend(np.eye(2), 0)


@given(st.integers(1, 6), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_block_extend_preserves_column_sums(N, M, seed):
    A = random_left_stochastic(np.random.default_rng(seed), N)
    ext = block_extend(A, M)
    np.testing.assert_allclose(ext.sum(axis=0), 1.0, atol=1e-12)
    np.testing.assert_allclose(ext.T @ np.ones(N * M), np.ones(N * M), atol=1e-12)


@given(st.integers(1, 6), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_block_extend_detects_broken_columns(N, M, seed):
    A = random_left_stochastic(np.random.default_rng(seed), N)
    A[0, 0] += 0.1
    assert not np.allclose(block_extend(A, M).sum(axis=0), 1.0, atol=1e-12)


@given(st.integers(1, 6), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_transposed_extension_has_unit_block_max_norm(N, M, seed):
    A = random_left_stochastic(np.random.default_rng(seed), N)
    assert block_max_norm_matrix(block_extend(A.T, M), M) == pytest.approx(1.0, abs=1e-12)


def test_edge_list_roundtrip(tmp_path):
    top = random_geometric_topology(7, 0.6, np.random.default_rng(3))
    path = tmp_path / "net.txt"
    save_edge_list(top, path)
    back = load_edge_list(path)
    np.testing.assert_array_equal(back.adjacency, top.adjacency)
    assert back.connected == is_connected(top.adjacency)


def test_edge_list_errors_name_the_line(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("# comment\nnodes 3\n0 1\n0 1 2\n")
    with pytest.raises(ValueError, match=r"bad.txt:4"):
        load_edge_list(path)
    path.write_text("0 1\n")
    with pytest.raises(ValueError, match="header"):
        load_edge_list(path)


def test_permuted_relabels_consistently():
    top = line3()
    mats = build_uniform_combiners(top)
    perm = [2, 0, 1]
    np.testing.assert_array_equal(build_uniform_combiners(top.permuted(perm)).A, mats.permuted(perm).A)


def test_matrices_are_read_only():
    mats = build_uniform_combiners(line3())
    with pytest.raises(ValueError):
        mats.A[0, 0] = 2.0
