import math

import numpy as np
import pytest

from gen import symmetric_instance
from menuforge.benchmarks import brev, srev_star
from menuforge.dist import iid, make_marginal, make_product, point_mass
from menuforge.errors import BudgetExceeded, InvalidDistribution, SupportTooLarge
from menuforge.menu import ItemPermutationGroup, modrev_objective, revenue_exact
from menuforge.oracle import brute_force_optimal, optimal_revenue
from menuforge.symmetric_lp import build_modrev_lp, canonical_reps, count_reps, group_items, solve_modrev

U12 = make_marginal([1, 2], [0.5, 0.5])
A = make_marginal([0, 1], [0.5, 0.5])
B = make_marginal([1, 3], [0.25, 0.75])


class TestGrouping:
    def test_iid_one_block(self):
        assert group_items(iid(U12, 4, 4)).blocks == ((0, 1, 2, 3),)

    def test_distinct_singletons(self):
        D = make_product([point_mass(1), point_mass(2), point_mass(3)], 3)
        assert group_items(D).is_trivial

    def test_weights_split_blocks(self):
        D = make_product([A, A, B, B], 4)
        assert group_items(D, [1, 1, 1, 2]).blocks == ((0, 1), (2,), (3,))


class TestReps:
    def test_two_iid_items(self):
        pa, pb = 0.3, 0.7
        D = iid(make_marginal([1, 2], [pa, pb]), 2, 2)
        reps = canonical_reps(D, ItemPermutationGroup.full(2))
        got = {tuple(r.values): (r.count, r.mass) for r in reps}
        assert set(got) == {(1.0, 1.0), (2.0, 1.0), (2.0, 2.0)}
        assert got[(1.0, 1.0)][1] == pytest.approx(pa * pa)
        assert got[(2.0, 1.0)] == (2, pytest.approx(2 * pa * pb))
        assert got[(2.0, 2.0)][1] == pytest.approx(pb * pb)

    def test_singletons_are_the_support(self):
        D = make_product([A, B], 2)
        reps = canonical_reps(D, ItemPermutationGroup.trivial(2))
        assert len(reps) == 4 and all(r.count == 1 for r in reps)

    def test_masses_sum_to_one(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            D = symmetric_instance(rng, [int(s) for s in rng.integers(1, 4, int(rng.integers(1, 3)))], 3, 1)
            total = math.fsum(r.mass for r in canonical_reps(D, group_items(D)))
            assert total == pytest.approx(1.0, abs=1e-12)

    def test_budget(self):
        with pytest.raises(BudgetExceeded):
            canonical_reps(iid(U12, 6, 1), ItemPermutationGroup.trivial(6), budget=10)

    def test_asymmetric_block_rejected(self):
        with pytest.raises(InvalidDistribution):
            canonical_reps(make_product([A, B], 2), ItemPermutationGroup.full(2))


def test_lp_size():
    D = iid(U12, 3, 3)
    g = group_items(D)
    reps = canonical_reps(D, g)
    model = build_modrev_lp(reps, np.zeros(3), 3, g)
    m = count_reps(D, g)
    assert model.num_vars == m * (3 + 1) + 3


class TestSolve:
    def test_point_mass_sells(self):
        sol = solve_modrev(make_product([point_mass(1)], 1))
        assert sol.objective == pytest.approx(1.0)
        ((o,),) = [c.options for c in sol.menu.components]
        assert o.alloc.tolist() == [1.0] and o.price == pytest.approx(1.0)

    def test_withholding_wins(self):
        sol = solve_modrev(make_product([point_mass(1)], 1), [10.0])
        assert sol.objective == pytest.approx(10.0) and sol.menu.num_options == 0

    @pytest.mark.parametrize("v,w", [(1.0, 0.4), (2.0, 3.0), (0.5, 0.5)])
    def test_single_class_closed_form(self, v, w):
        assert solve_modrev(make_product([point_mass(v)], 1), [w]).objective == pytest.approx(max(v, w))

    def test_single_item_posted_price(self):
        assert solve_modrev(make_product([U12], 1)).objective == pytest.approx(1.0)

    def test_point_mass_full_surplus(self):
        D = make_product([point_mass(1), point_mass(2), point_mass(4)], 2)
        assert solve_modrev(D).objective == pytest.approx(6.0)

    def test_unit_demand_pair_matches_oracle(self):
        D = iid(U12, 2, 1)
        assert solve_modrev(D).objective == pytest.approx(brute_force_optimal(D).objective, abs=1e-6)

    def test_objective_is_achieved(self):
        D = make_product([A, B, B], 3)
        w = [0.2, 0.0, 0.0]
        sol = solve_modrev(D, w)
        assert modrev_objective(sol.menu, D, w) == pytest.approx(sol.objective, abs=1e-6)

    def test_beats_benchmarks(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            D = symmetric_instance(rng, [2, 1], 3, int(rng.integers(1, 4)))
            opt = solve_modrev(D).objective
            assert opt >= srev_star(D, "exact_small").revenue - 1e-7
            assert opt >= brev(D).revenue - 1e-7


def test_oracle_cap():
    with pytest.raises(SupportTooLarge):
        brute_force_optimal(iid(U12, 4, 4), cap=8)
    assert optimal_revenue(make_product([U12], 1)) == pytest.approx(1.0)
