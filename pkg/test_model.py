"""
Tests for the polymer space: extended reals, energies, the kernel F and the
stability check.
"""

import math

import numpy as np
import pytest

from cluster.errors import CapacityError
from cluster.model import INF, ExtendedReal, PolymerSpace, WeightAssignment, verify_stability
from conftest import make_space, random_space


class TestExtendedReal:
    def test_parsing(self):
        assert ExtendedReal.of("inf") == INF
        assert ExtendedReal.of(math.inf) == INF
        assert ExtendedReal.of(-2.5) == ExtendedReal(-2.5)
        with pytest.raises(ValueError):
            ExtendedReal.of("-inf")
        with pytest.raises(ValueError):
            ExtendedReal(math.nan)

    def test_arithmetic_and_order(self):
        assert ExtendedReal(1.0) + ExtendedReal(2.0) == ExtendedReal(3.0)
        assert ExtendedReal(1.0) + INF == INF
        assert ExtendedReal(1e300) < INF
        assert not INF < ExtendedReal(1e300)
        assert INF.exp_neg() == 0.0
        assert float(INF) == math.inf
        assert INF.to_json() == "inf"


class TestEnergy:
    def test_single_polymer_has_zero_energy(self, single_space):
        assert single_space.energy([0]) == ExtendedReal(0.0)

    def test_finite_pair(self):
        space = make_space([0.1, 0.1], [(0, 1, -1.5)])
        assert space.energy([0, 1]) == ExtendedReal(-1.5)

    def test_incompatible_pair(self, triangle_space):
        assert triangle_space.energy([0, 1]) == INF
        assert triangle_space.energy([0, 0]) == INF

    def test_empty_configuration(self, single_space):
        with pytest.raises(ValueError):
            single_space.energy([])


class TestKernel:
    @pytest.mark.parametrize("value, expected", [("inf", 1.0), (0.0, 0.0), (-0.5, 0.5), (2.0, 2.0)])
    def test_kernel_values(self, value, expected):
        space = make_space([0.1, 0.1], [(0, 1, value)])
        assert space.kernel_F(0, 1) == expected
        assert space.F_matrix()[1, 0] == expected

    def test_gibbs_and_mayer(self, attractive_pair):
        gibbs = attractive_pair.gibbs_matrix()
        assert gibbs[0, 0] == 0.0
        assert gibbs[0, 1] == pytest.approx(math.e)
        assert attractive_pair.mayer_matrix()[0, 1] == pytest.approx(math.e - 1.0)

    def test_hard_core_flag(self, triangle_space, attractive_pair):
        assert triangle_space.is_hard_core()
        assert not attractive_pair.is_hard_core()

    def test_rho_tilde(self, attractive_pair):
        assert attractive_pair.rho_tilde() == pytest.approx([0.1 * math.exp(0.5)] * 2)


class TestConstruction:
    def test_conflicting_entries(self):
        with pytest.raises(ValueError):
            make_space([0.1, 0.1], [(0, 1, 1.0), (1, 0, 2.0)])

    def test_negative_activity(self):
        with pytest.raises(ValueError):
            make_space([-0.1], [])

    def test_entries_round_trip(self, attractive_pair):
        listing = attractive_pair.entries()
        assert (0, 1, ExtendedReal(-1.0)) in listing
        assert (0, 0, INF) in listing
        rebuilt = PolymerSpace.from_entries(
            attractive_pair.ids, attractive_pair.rho, attractive_pair.B, listing
        )
        assert np.array_equal(rebuilt.potential, attractive_pair.potential)
        assert np.array_equal(rebuilt.incompatible, attractive_pair.incompatible)

    def test_arrays_are_read_only(self, single_space):
        with pytest.raises(ValueError):
            single_space.rho[0] = 1.0

    def test_unknown_id(self, single_space):
        with pytest.raises(KeyError):
            single_space.index_of("nope")

    def test_weights(self):
        assert WeightAssignment(np.array([1.0, 0.0]))[0] == 1.0
        with pytest.raises(ValueError):
            WeightAssignment(np.array([1.0, -1.0]))
        with pytest.raises(ValueError):
            WeightAssignment(np.array([math.inf]))


class TestStability:
    def test_nonnegative_potentials_are_stable(self):
        space = make_space([0.1, 0.2, 0.3], [(0, 1, 1.0), (1, 2, 0.5)], self_incompatible=False)
        report = verify_stability(space, 4)
        assert report.passed
        assert report.checked > 0

    def test_attractive_pair_at_the_edge(self):
        space = make_space([0.1, 0.1], [(0, 1, -1.0)], B=[0.5, 0.5])
        report = verify_stability(space, 2)
        assert report.passed
        assert report.worst_margin == pytest.approx(0.0)

    def test_attractive_pair_violation(self):
        space = make_space([0.1, 0.1], [(0, 1, -1.0)], B=[0.4, 0.4])
        report = verify_stability(space, 2)
        assert not report.passed
        assert report.violation == (0, 1)
        assert report.violation_energy == pytest.approx(-1.0)
        assert report.violation_bound == pytest.approx(-0.8)

    def test_incompatible_multisets_are_vacuous(self, triangle_space):
        report = verify_stability(triangle_space, 3)
        assert report.passed
        assert report.checked == 0
        assert report.vacuous > 0

    def test_multiset_guard(self, triangle_space):
        with pytest.raises(CapacityError):
            verify_stability(triangle_space, 3, max_multisets=5)

    @pytest.mark.parametrize("seed", range(10))
    def test_enlarging_B_never_breaks_stability(self, seed):
        space = random_space(seed)
        outcomes = []
        for scale in (0.0, 0.25, 0.5, 1.0, 2.0):
            scaled = PolymerSpace.from_entries(space.ids, space.rho, scale * np.asarray(space.B), space.entries())
            outcomes.append(verify_stability(scaled, space.size).passed)
        assert outcomes[-2:] == [True, True]
        assert outcomes == sorted(outcomes)

    def test_attractive_pair_passes_once_B_reaches_the_edge(self):
        outcomes = [
            verify_stability(make_space([0.1, 0.1], [(0, 1, -1.0)], B=[b, b]), 2).passed
            for b in (0.3, 0.4, 0.5, 0.6)
        ]
        assert outcomes == [False, False, True, True]
