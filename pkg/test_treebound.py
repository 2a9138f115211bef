"""
Tests for the tree-graph identity, the interpolation measure, the cut-off
potential and the tree-graph bound.
"""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cluster.errors import CapacityError, QuadratureError
from cluster.expansion import ursell, ursell_from_matrix
from cluster.graphs import LabeledTree, enumerate_trees
from cluster.model import verify_stability
from cluster.treebound import (
    CutoffPotential,
    InterpolationChain,
    convex_decomposition_K,
    cutoff_H0,
    enumerate_chains,
    measure_mass,
    tree_graph_rhs,
    tree_kernel_sum,
    ursell_tree_bound,
)
from conftest import make_space


class TestInterpolation:
    def test_chain_validation(self):
        with pytest.raises(ValueError):
            InterpolationChain((2, 1, 3))
        assert len(list(enumerate_chains(4))) == 6

    def test_full_interpolation_gives_the_energy(self):
        potential = np.array([[0.0, 1.0, -2.0], [1.0, 0.0, 0.5], [-2.0, 0.5, 0.0]])
        chain = InterpolationChain((1, 3, 2))
        assert convex_decomposition_K(potential, chain, [1.0, 1.0]) == pytest.approx(-0.5)

    def test_fully_decoupled_pair(self):
        potential = np.array([[0.0, 3.0], [3.0, 0.0]])
        assert convex_decomposition_K(potential, InterpolationChain((1, 2)), [0.0]) == 0.0

    def test_partial_decoupling(self):
        potential = np.array([[0.0, 1.0, 2.0], [1.0, 0.0, 4.0], [2.0, 4.0, 0.0]])
        chain = InterpolationChain((1, 2, 3))
        # {1,2} crosses X_1, {1,3} crosses X_1 and X_2, {2,3} crosses X_2
        assert convex_decomposition_K(potential, chain, [0.5, 0.25]) == pytest.approx(
            0.5 * 1.0 + 0.125 * 2.0 + 0.25 * 4.0
        )

    def test_wrong_parameter_count(self):
        with pytest.raises(ValueError):
            convex_decomposition_K(np.zeros((3, 3)), InterpolationChain((1, 2, 3)), [0.5])


class TestMeasure:
    def test_single_edge(self):
        assert measure_mass(LabeledTree(n=2, edges=((1, 2),))) == pytest.approx(1.0, abs=1e-12)

    def test_path_on_three_vertices(self):
        assert measure_mass(LabeledTree(n=3, edges=((1, 2), (2, 3)))) == pytest.approx(1.0, abs=1e-10)

    def test_star_on_four_vertices(self):
        assert measure_mass(LabeledTree(n=4, edges=((1, 2), (1, 3), (1, 4)))) == pytest.approx(1.0, abs=1e-10)

    @pytest.mark.parametrize("n", [3, 4, 5])
    def test_every_tree_is_a_probability_measure(self, n):
        for tree in enumerate_trees(n):
            assert measure_mass(tree) == pytest.approx(1.0, abs=1e-10)

    def test_root_labelled_tree_is_rejected(self):
        with pytest.raises(ValueError):
            measure_mass(LabeledTree(n=2, edges=((0, 1),), offset=0))


class TestIdentity:
    @pytest.mark.parametrize("v", [0.0, 0.7, -1.3])
    def test_two_vertices(self, v):
        potential = np.array([[0.0, v], [v, 0.0]])
        result = tree_graph_rhs(potential)
        assert result.value == pytest.approx(math.exp(-v) - 1.0, abs=1e-12)
        assert result.converged

    def test_single_vertex(self):
        assert tree_graph_rhs(np.zeros((1, 1))).value == 1.0

    @settings(max_examples=20, deadline=None)
    @given(arrays(np.float64, (3, 3), elements=st.floats(-2.0, 2.0, allow_nan=False)))
    def test_three_vertices_match_the_graph_sum(self, raw):
        upper = np.triu(raw, 1)
        potential = upper + upper.T
        result = tree_graph_rhs(potential, order=16)
        assert result.value == pytest.approx(ursell_from_matrix(potential), abs=1e-9)

    def test_four_vertices(self):
        rng = np.random.Generator(np.random.PCG64(11))
        upper = np.triu(rng.uniform(-1.0, 1.0, size=(4, 4)), 1)
        potential = upper + upper.T
        result = tree_graph_rhs(potential, order=10)
        assert result.value == pytest.approx(ursell_from_matrix(potential), abs=1e-9)
        assert result.trees == 16

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_seeded_potentials_match_the_graph_sum(self, n):
        rng = np.random.Generator(np.random.PCG64(100 + n))
        for _ in range(200):
            upper = np.triu(rng.uniform(-2.0, 2.0, size=(n, n)), 1)
            potential = upper + upper.T
            space = make_space(
                [0.1] * n,
                [(i, j, float(potential[i, j])) for i in range(n) for j in range(i + 1, n)],
                self_incompatible=False,
            )
            assert abs(tree_graph_rhs(potential).value - ursell(space, list(range(n)))) < 1e-7

    def test_rejects_infinite_or_asymmetric_input(self):
        with pytest.raises(ValueError):
            tree_graph_rhs(np.array([[0.0, math.inf], [math.inf, 0.0]]))
        with pytest.raises(ValueError):
            tree_graph_rhs(np.array([[0.0, 1.0], [2.0, 0.0]]))

    def test_vertex_cap(self):
        with pytest.raises(CapacityError):
            tree_graph_rhs(np.zeros((6, 6)))

    def test_strict_mode_raises_on_disagreement(self):
        potential = np.array([[0.0, 40.0], [40.0, 0.0]])
        with pytest.raises(QuadratureError):
            tree_graph_rhs(potential, order=2, strict=True)


class TestCutoff:
    def test_h0_example(self):
        space = make_space([0.1] * 3, [(0, 1, "inf"), (0, 2, -2.0), (1, 2, -3.0)])
        assert cutoff_H0(space, [0, 1, 2]) == pytest.approx(5.0)

    def test_h0_without_incompatible_pairs(self, attractive_pair):
        assert cutoff_H0(attractive_pair, [0]) == 0.0
        space = make_space([0.1, 0.1], [(0, 1, -1.0)], self_incompatible=False)
        assert cutoff_H0(space, [0, 1]) == 0.0

    def test_h0_makes_the_cutoff_stable(self):
        space = make_space([0.1] * 3, [(0, 1, "inf"), (0, 2, -2.0), (1, 2, -3.0)], B=[2.0, 2.0, 2.0])
        H = cutoff_H0(space, [0, 1, 2])
        assert CutoffPotential(space, H).stable_on([0, 1, 2])

    @pytest.mark.parametrize("H", [10.0, 20.0, 40.0])
    def test_cutoff_ursell_converges(self, H, triangle_space):
        approx = CutoffPotential(triangle_space, H).ursell([0, 1, 2])
        assert abs(approx - ursell(triangle_space, [0, 1, 2])) <= 10.0 * math.exp(-H)

    def test_cutoff_is_stable_on_every_fixture(
        self, single_space, triangle_space, attractive_pair, independent_pair
    ):
        mixed = make_space([0.1] * 3, [(0, 1, "inf"), (0, 2, -2.0), (1, 2, -3.0)], B=[2.0, 2.0, 2.0])
        for space in (single_space, triangle_space, attractive_pair, independent_pair, mixed):
            assert verify_stability(space, 6).passed
            for size in range(2, 7):
                for config in itertools.combinations_with_replacement(range(space.size), size):
                    assert CutoffPotential(space, cutoff_H0(space, config)).stable_on(config)

    def test_cutoff_must_be_finite(self, triangle_space):
        with pytest.raises(ValueError):
            CutoffPotential(triangle_space, math.inf)


class TestTreeBound:
    def test_single_polymer(self, attractive_pair):
        assert ursell_tree_bound(attractive_pair, [0]) == pytest.approx(math.exp(0.5))

    def test_triangle(self, triangle_space):
        bound = ursell_tree_bound(triangle_space, [0, 1, 2])
        assert bound == pytest.approx(3.0)
        assert abs(ursell(triangle_space, [0, 1, 2])) <= bound

    def test_attractive_pair(self, attractive_pair):
        bound = ursell_tree_bound(attractive_pair, [0, 1])
        assert bound == pytest.approx(math.e)
        assert abs(ursell(attractive_pair, [0, 1])) <= bound

    def test_kirchhoff_matches_enumeration(self):
        rng = np.random.Generator(np.random.PCG64(3))
        upper = np.triu(rng.uniform(0.0, 2.0, size=(5, 5)), 1)
        kernel = upper + upper.T
        assert tree_kernel_sum(kernel, "kirchhoff") == pytest.approx(tree_kernel_sum(kernel), rel=1e-10)

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.sampled_from([0, 1, 2]), min_size=1, max_size=5))
    def test_bound_holds_on_stable_spaces(self, config):
        space = make_space(
            [0.1, 0.1, 0.1], [(0, 1, "inf"), (0, 2, -1.0), (1, 2, 0.5)], B=[0.5, 0.5, 0.5]
        )
        value = ursell(space, config, "recursive")
        assert abs(value) <= ursell_tree_bound(space, config) * (1.0 + 1e-9)
