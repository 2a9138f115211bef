"""
Tests for partition functions, Ursell coefficients and the Mayer series.
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from cluster.errors import CapacityError
from cluster.expansion import (
    Volume,
    abs_log_xi,
    mayer_log_xi,
    partition_function,
    pinned_sum,
    stability_tail_bound,
    ursell,
    ursell_from_matrix,
)
from conftest import make_space, random_space

METHODS = ("ordered", "multiset")


class TestPartitionFunction:
    @pytest.mark.parametrize("method", METHODS)
    def test_single_polymer(self, method):
        space = make_space([0.25], [])
        result = partition_function(space, max_order=5, method=method)
        assert result.value == pytest.approx(1.25)
        assert result.exact
        assert result.tail_bound == 0.0
        assert result.terms == pytest.approx([1.0, 0.25])

    @pytest.mark.parametrize("method", METHODS)
    def test_incompatible_pair(self, method):
        space = make_space([0.2, 0.2], [(0, 1, "inf")])
        assert partition_function(space, max_order=4, method=method).value == pytest.approx(1.4)

    @pytest.mark.parametrize("method", METHODS)
    def test_attractive_pair(self, method, attractive_pair):
        z = 0.1
        result = partition_function(attractive_pair, max_order=4, method=method)
        assert result.value == pytest.approx(1 + 2 * z + z * z * math.e, rel=1e-14)
        assert result.order == 2
        if method == "multiset":
            assert result.configurations == 3

    def test_order_picked_from_the_tail(self):
        space = make_space([0.1, 0.1], [(0, 1, 0.5)], self_incompatible=False)
        result = partition_function(space, tolerance=1e-12)
        assert not result.exact
        assert result.tail_bound <= 1e-12
        assert result.tail_bound == stability_tail_bound(0.2, result.order)

    def test_self_compatible_polymer_matches_the_exponential(self):
        space = make_space([0.3], [], self_incompatible=False)
        result = partition_function(space, max_order=20)
        assert result.value == pytest.approx(math.exp(0.3), rel=1e-13)
        assert result.tail_bound < 1e-20

    def test_volume_restriction(self, triangle_space):
        result = partition_function(triangle_space, volume=Volume.of(triangle_space, [0, 2]))
        assert result.value == pytest.approx(1.2)

    def test_zero_activity_is_skipped(self):
        space = make_space([0.0, 0.5], [])
        result = partition_function(space, max_order=3)
        assert result.value == pytest.approx(1.5)

    def test_threads_give_the_same_sum(self, attractive_pair):
        serial = partition_function(attractive_pair, max_order=3)
        threaded = partition_function(attractive_pair, max_order=3, threads=2)
        assert serial.value == threaded.value

    def test_budget(self):
        space = make_space([0.1] * 6, [], self_incompatible=False)
        with pytest.raises(CapacityError):
            partition_function(space, max_order=6, max_tuples=100)

    def test_empty_volume(self, single_space):
        with pytest.raises(ValueError):
            Volume.of(single_space, [])


class TestUrsell:
    @pytest.mark.parametrize("method", ["graphs", "recursive"])
    def test_small_cases(self, method, triangle_space, attractive_pair):
        assert ursell(triangle_space, [0], method) == 1.0
        assert ursell(triangle_space, [0, 1], method) == -1.0
        assert ursell(triangle_space, [0, 1, 2], method) == pytest.approx(2.0)
        assert ursell(attractive_pair, [0, 1], method) == pytest.approx(math.e - 1.0)

    @pytest.mark.parametrize("n", [2, 3, 4, 5])
    def test_repeated_hard_core_polymer(self, n, single_space):
        expected = (-1) ** (n - 1) * math.factorial(n - 1)
        assert ursell(single_space, [0] * n, "recursive") == pytest.approx(expected)
        assert ursell(single_space, [0] * n, "graphs") == pytest.approx(expected)

    def test_disconnected_configuration_vanishes(self, independent_pair):
        assert ursell(independent_pair, [0, 1]) == 0.0

    @pytest.mark.parametrize("seed", range(10))
    def test_permutation_symmetry(self, seed):
        space = random_space(seed, 3, 4)
        rng = np.random.Generator(np.random.PCG64(seed))
        config = rng.integers(0, space.size, size=4).tolist()
        value = ursell(space, config)
        for _ in range(5):
            shuffled = rng.permutation(config).tolist()
            assert abs(ursell(space, shuffled) - value) <= 1e-12 * max(1.0, abs(value))

    def test_graph_sum_cap(self, single_space):
        with pytest.raises(CapacityError):
            ursell(single_space, [0] * 9, "graphs")

    @settings(max_examples=40, deadline=None)
    @given(
        arrays(np.float64, (5, 5), elements=st.floats(-1.0, 1.0, allow_nan=False)),
        st.integers(2, 5),
    )
    def test_methods_agree(self, raw, n):
        upper = np.triu(raw[:n, :n], 1)
        potential = upper + upper.T
        by_graphs = ursell_from_matrix(potential, "graphs")
        by_recursion = ursell_from_matrix(potential, "recursive")
        assert by_recursion == pytest.approx(by_graphs, rel=1e-10, abs=1e-10)


class TestSeries:
    def test_first_order_is_the_activity(self, single_space):
        assert abs_log_xi(single_space, max_order=1).value == pytest.approx(0.3)

    def test_abs_series_is_monotone(self, attractive_pair):
        series = abs_log_xi(attractive_pair, max_order=4)
        assert series.monotone
        assert all(b >= a for a, b in zip(series.partial_sums, series.partial_sums[1:]))

    def test_single_polymer_mayer_series(self):
        z = 0.2
        series = mayer_log_xi(make_space([z], []), max_order=6)
        expected = [(-1) ** (n - 1) * z**n / n for n in range(1, 7)]
        assert series.terms == pytest.approx(expected, rel=1e-12)

    def test_independent_polymers_factorize(self, independent_pair):
        series = mayer_log_xi(independent_pair, max_order=8)
        assert series.value == pytest.approx(math.log(1.1) + math.log(1.2), abs=1e-7)
        first = mayer_log_xi(make_space([0.1], []), max_order=8)
        second = mayer_log_xi(make_space([0.2], []), max_order=8)
        for order in range(1, 9):
            assert series.partial_sum(order) == pytest.approx(
                first.partial_sum(order) + second.partial_sum(order), rel=1e-12
            )

    def test_mayer_series_approaches_the_partition_function(self, attractive_pair):
        xi = partition_function(attractive_pair, max_order=4).value
        series = mayer_log_xi(attractive_pair, max_order=6)
        assert math.exp(series.value) == pytest.approx(xi, abs=1e-4)
        errors = [abs(math.exp(series.partial_sum(n)) - xi) for n in (2, 4, 6)]
        assert errors == sorted(errors, reverse=True)

    def test_pinned_sum_starts_at_one(self, attractive_pair):
        series = pinned_sum(attractive_pair, 0, max_order=0)
        assert series.terms == [1.0]

    def test_pinned_sum_of_a_hard_core_polymer(self):
        z = 0.2
        series = pinned_sum(make_space([z], []), 0, max_order=5)
        assert series.terms == pytest.approx([z**n for n in range(6)], rel=1e-12)

    def test_multiset_route_matches_ordered(self, attractive_pair):
        ordered = abs_log_xi(attractive_pair, max_order=4)
        multiset = abs_log_xi(attractive_pair, max_order=4, max_tuples=20)
        assert multiset.terms == pytest.approx(ordered.terms, rel=1e-12)


class TestBounds:
    @pytest.mark.parametrize("seed", range(10))
    def test_log_xi_is_bounded_by_the_pinned_sums(self, seed):
        space = random_space(seed)
        series = abs_log_xi(space, max_order=5)
        for order in range(1, 6):
            pinned = max(
                space.rho[g] * pinned_sum(space, g, max_order=order - 1).value for g in range(space.size)
            )
            assert series.partial_sum(order) <= space.size * pinned * (1.0 + 1e-12)

    @pytest.mark.parametrize("seed", range(10))
    def test_partition_function_is_bounded_by_the_stability_constants(self, seed):
        space = random_space(seed)
        result = partition_function(space)
        assert result.exact
        assert result.value <= math.exp(float(np.sum(space.rho_tilde()))) * (1.0 + 1e-12)

    def test_stability_bound_on_the_attractive_pair(self, attractive_pair):
        xi = partition_function(attractive_pair).value
        assert xi == pytest.approx(1.2 + 0.01 * math.e)
        assert xi <= math.exp(0.2 * math.exp(0.5))


class TestDerivativeIdentity:
    @pytest.mark.parametrize("pinned", [0, 1, 2])
    def test_pinned_sum_is_the_activity_derivative(self, pinned):
        space = make_space([0.1, 0.15, 0.05], [(0, 1, "inf"), (0, 2, -0.5), (1, 2, 0.8)], B=[0.5] * 3)
        h = 1e-5
        up = np.array(space.rho)
        down = np.array(space.rho)
        up[pinned] += h
        down[pinned] -= h
        slope = (
            abs_log_xi(space, rho=up, max_order=4).value - abs_log_xi(space, rho=down, max_order=4).value
        ) / (2 * h)
        assert slope == pytest.approx(pinned_sum(space, pinned, max_order=3).value, abs=1e-6)

    @pytest.mark.parametrize("seed", range(10))
    def test_activity_derivative_on_random_spaces(self, seed):
        space = random_space(seed, 2, 3)
        pinned = seed % space.size
        h = 1e-5
        up = np.array(space.rho)
        down = np.array(space.rho)
        up[pinned] += h
        down[pinned] -= h
        slope = (
            abs_log_xi(space, rho=up, max_order=4).value - abs_log_xi(space, rho=down, max_order=4).value
        ) / (2 * h)
        assert slope == pytest.approx(pinned_sum(space, pinned, max_order=3).value, abs=1e-6)
