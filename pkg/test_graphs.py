"""
Tests for graph enumeration and the planar rooted tree projection.
"""

import math
from collections import Counter

import networkx as nx
import pytest

from cluster.errors import CapacityError
from cluster.graphs import (
    LabeledGraph,
    LabeledTree,
    PlanarRootedTree,
    enumerate_connected_graphs,
    enumerate_planar_rooted,
    enumerate_trees,
    preimage_count,
    to_planar_rooted,
)

LEAF = PlanarRootedTree()


@pytest.mark.parametrize("n, expected", [(1, 1), (2, 1), (3, 4), (4, 38), (5, 728), (6, 26704)])
def test_connected_graph_counts(n, expected):
    graphs = list(enumerate_connected_graphs(n))
    assert len(graphs) == expected
    assert len(set(graphs)) == expected
    assert all(graph.is_connected() for graph in graphs)


def test_connected_graphs_of_three_vertices():
    graphs = list(enumerate_connected_graphs(3))
    edge_counts = Counter(len(graph.edges) for graph in graphs)
    assert edge_counts == {2: 3, 3: 1}


def test_connected_graphs_come_out_in_edge_order():
    edge_lists = [graph.edges for graph in enumerate_connected_graphs(4)]
    assert edge_lists == sorted(edge_lists)


def test_graph_enumeration_cap():
    with pytest.raises(CapacityError) as info:
        next(enumerate_connected_graphs(9))
    assert info.value.cap == 8


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
def test_cayley_counts(n):
    trees = list(enumerate_trees(n))
    expected = n ** (n - 2) if n > 1 else 1
    assert len(trees) == expected
    assert len(set(trees)) == len(trees)


def test_rooted_trees_on_four_vertices():
    trees = list(enumerate_trees(3, include_root_zero=True))
    assert len(trees) == 16
    assert all(tree.offset == 0 and tree.n == 4 for tree in trees)


def test_tree_validation():
    with pytest.raises(ValueError):
        LabeledTree(n=3, edges=((1, 2), (2, 3), (1, 3)))
    with pytest.raises(ValueError):
        LabeledTree(n=4, edges=((1, 2), (2, 3), (1, 3)))
    with pytest.raises(ValueError):
        LabeledGraph(n=2, edges=((1, 1),))


def test_edges_are_normalized():
    assert LabeledGraph(n=3, edges=((3, 1), (2, 1))).edges == ((1, 2), (1, 3))


def test_planar_projection_of_a_path():
    tree = LabeledTree(n=2, edges=((0, 1),), offset=0)
    planar = to_planar_rooted(tree)
    assert planar == PlanarRootedTree((LEAF,))
    assert planar.branching_factors() == [1, 0]


def test_planar_projection_orders_descendants_by_label():
    tree = LabeledTree(n=5, edges=((0, 3), (1, 3), (2, 3), (1, 4)), offset=0)
    planar = to_planar_rooted(tree)
    assert planar.shape() == "[[[[]],[]]]"
    assert planar.generations() == [1, 1, 2, 1]
    assert preimage_count(planar) == 12


def test_distinct_labelings_give_distinct_shapes():
    first = LabeledTree(n=5, edges=((0, 2), (0, 3), (1, 2), (2, 4)), offset=0)
    second = LabeledTree(n=5, edges=((0, 2), (0, 4), (4, 3), (1, 4)), offset=0)
    assert to_planar_rooted(first) != to_planar_rooted(second)


def test_projection_needs_the_root():
    with pytest.raises(ValueError):
        to_planar_rooted(LabeledTree(n=2, edges=((1, 2),)))


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
def test_preimage_counts_match_projection(n):
    projected = Counter(to_planar_rooted(tree) for tree in enumerate_trees(n, include_root_zero=True))
    shapes = enumerate_planar_rooted(n)
    assert set(projected) == set(shapes)
    for shape in shapes:
        assert projected[shape] == preimage_count(shape)
    assert sum(preimage_count(shape) for shape in shapes) == (n + 1) ** (n - 1)


def test_preimage_count_of_chain_and_star():
    chain = LEAF
    for _ in range(5):
        chain = PlanarRootedTree((chain,))
    assert preimage_count(chain) == math.factorial(5)
    star = PlanarRootedTree((LEAF,) * 5)
    assert preimage_count(star) == 1


@pytest.mark.parametrize("n", range(0, 8))
def test_planar_tree_counts_are_catalan(n):
    assert len(enumerate_planar_rooted(n)) == math.comb(2 * n, n) // (n + 1)


def test_planar_depth_filter():
    shallow = enumerate_planar_rooted(3, max_depth=1)
    assert shallow == [PlanarRootedTree((LEAF, LEAF, LEAF))]


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_enumeration_agrees_with_networkx(n):
    for graph in enumerate_connected_graphs(n):
        assert nx.is_connected(graph.to_networkx())
    for tree in enumerate_trees(n):
        assert nx.is_tree(tree.to_networkx())


def test_disconnected_graph_per_networkx():
    graph = LabeledGraph(n=4, edges=((1, 2), (3, 4)))
    assert not graph.is_connected()
    assert nx.number_connected_components(graph.to_networkx()) == 2
