import itertools
import math

import numpy as np
import pytest

from gen import random_instance
from menuforge.dist import iid, make_marginal, make_product, point_mass
from menuforge.errors import LengthMismatch
from menuforge.menu import (
    ItemPermutationGroup,
    MenuOption,
    SymmetricComponent,
    SymmetricMenu,
    best_symmetric_variant,
    choose,
    complexity_measures,
    concat_exclusive,
    expand_orbits,
    leftovers,
    make_exclusive,
    modrev_objective,
    option_utility,
    orbit_size,
    prune_dominated,
    revenue_exact,
    revenue_mc,
    scale_prices,
)

U12 = make_marginal([1, 2], [0.5, 0.5])


def menu(options, n, group=None):
    return SymmetricMenu.from_options([MenuOption(np.array(x, float), p) for x, p in options], n, group)


def prices(M):
    return sorted(o.price for *_, o in M.iter_options())


class TestGroup:
    def test_blocks_normalised(self):
        g = ItemPermutationGroup(((2, 0), (1,)))
        assert g.blocks == ((0, 2), (1,))
        assert g.block_of[2] == g.block_of[0]

    def test_not_a_partition(self):
        with pytest.raises(Exception):
            ItemPermutationGroup(((0, 1), (1, 2)))

    def test_trivial_and_full(self):
        assert ItemPermutationGroup.trivial(3).is_trivial
        assert ItemPermutationGroup.full(3).blocks == ((0, 1, 2),)


class TestOption:
    def test_rejects_out_of_range(self):
        with pytest.raises(Exception):
            MenuOption(np.array([1.5]), 1.0)
        with pytest.raises(Exception):
            MenuOption(np.array([0.5]), -1.0)


class TestUtility:
    def test_single_item(self):
        assert option_utility([1, 0], [1, 0], 0.5) == 0.5

    def test_null_option(self):
        assert option_utility([3, 4], [0, 0], 0) == 0

    def test_lottery(self):
        assert option_utility([2, 3], [0.5, 0.5], 1) == 1.5

    def test_shape_mismatch(self):
        with pytest.raises(LengthMismatch):
            option_utility([1, 2], [1], 0)


class TestBestVariant:
    def test_swap(self):
        x, u = best_symmetric_variant([0, 1], ItemPermutationGroup.full(2), [1, 0], 0.25)
        assert x.tolist() == [0, 1] and u == 0.75

    def test_singletons_are_identity(self):
        g = ItemPermutationGroup.trivial(3)
        x, u = best_symmetric_variant([3, 1, 2], g, [0.2, 0.5, 0.1], 0.3)
        assert x.tolist() == [0.2, 0.5, 0.1]
        assert u == option_utility([3, 1, 2], [0.2, 0.5, 0.1], 0.3)

    def test_against_permutations(self):
        rng = np.random.default_rng(3)
        g = ItemPermutationGroup(((0, 1, 2), (3, 4)))
        for _ in range(20):
            v = rng.integers(0, 9, 5) / 2
            x = rng.integers(0, 5, 5) / 4
            _, u = best_symmetric_variant(v, g, x, 1.0)
            best = max(
                float(v @ np.concatenate([x[list(p)], x[[3 + i for i in q]]])) - 1.0
                for p in itertools.permutations(range(3))
                for q in itertools.permutations(range(2))
            )
            assert u == best


class TestChoose:
    def test_empty_menu(self):
        c = choose([1.0], SymmetricMenu.empty(1))
        assert c.component == -1 and c.price == 0 and c.utility == 0

    def test_prefers_utility(self):
        c = choose([2.0], menu([([1], 1.0), ([1], 1.5)], 1))
        assert c.price == 1.0 and c.utility == 1.0

    def test_zero_utility_buys(self):
        c = choose([2.0], menu([([1], 2.0)], 1))
        assert c.price == 2.0 and c.utility == 0.0

    def test_tie_goes_to_higher_price(self):
        c = choose([2.0, 2.0], menu([([1, 0], 1.0), ([1, 1], 3.0)], 2))
        assert c.price == 3.0

    def test_symmetric_component_permutes(self):
        c = choose([0.0, 3.0], menu([([1, 0], 1.0)], 2, ItemPermutationGroup.full(2)))
        assert c.alloc.tolist() == [0.0, 1.0] and c.utility == 2.0


class TestRevenue:
    def test_point_mass(self):
        D = make_product([point_mass(1)], 1)
        assert revenue_exact(menu([([1], 1.0)], 1), D) == 1

    def test_unit_demand_exclusive(self):
        # buyer buys unless both values are 1: 2 * 3/4
        D = iid(U12, 2, 1)
        assert revenue_exact(menu([([1, 0], 2.0), ([0, 1], 2.0)], 2), D) == pytest.approx(1.5)

    def test_point_mass_matches_choice(self):
        D = make_product([point_mass(2), point_mass(1)], 2)
        M = menu([([1, 0], 1.5), ([1, 1], 2.5), ([0.5, 0.5], 0.5)], 2)
        assert revenue_exact(M, D) == choose([2, 1], M).price

    def test_mc_point_mass(self):
        D = make_product([point_mass(2)], 1)
        est = revenue_mc(menu([([1], 1.0)], 1), D, 1000, 0)
        assert est.value == 1.0 and est.stderr == 0.0

    def test_mc_matches_exact(self):
        rng = np.random.default_rng(8)
        D = random_instance(rng, 3, 3, 2)
        M = menu([([1, 0, 0], 1.0), ([0, 1, 1], 2.5), ([0.5, 0.5, 0.5], 1.2)], 3)
        ex = revenue_exact(M, D)
        est = revenue_mc(M, D, 50_000, 1)
        assert abs(est.value - ex) <= 4 * est.stderr

    def test_mc_seed_and_worker_determinism(self):
        D = iid(U12, 3, 3)
        M = menu([([1, 1, 1], 4.0)], 3)
        a = revenue_mc(M, D, 20_000, 5, workers=1)
        b = revenue_mc(M, D, 20_000, 5, workers=4)
        assert a == b == revenue_mc(M, D, 20_000, 5)


class TestLeftovers:
    def test_singletons(self):
        assert leftovers(menu([([1, 0], 1.0)], 2)).tolist() == [0, 1]

    def test_orbit_covers_block(self):
        assert leftovers(menu([([1, 0], 1.0)], 2, ItemPermutationGroup.full(2))).tolist() == [0, 0]

    def test_empty(self):
        assert leftovers(SymmetricMenu.empty(2)).tolist() == [1, 1]

    def test_modrev_objective(self):
        D = make_product([point_mass(1)], 1)
        assert modrev_objective(SymmetricMenu.empty(2), iid(U12, 2, 2), [3, 4]) == 7
        assert modrev_objective(menu([([1], 1.0)], 1), D, [10]) == 1
        assert modrev_objective(SymmetricMenu.empty(1), D, [10]) == 10
        M = menu([([1, 0], 1.0)], 2)
        assert modrev_objective(M, iid(U12, 2, 2), [0, 0]) == revenue_exact(M, iid(U12, 2, 2))


class TestScaling:
    def test_identity(self):
        M = menu([([1], 2.0)], 1)
        assert scale_prices(M, 1.0) == M

    def test_factor(self):
        assert prices(scale_prices(menu([([1], 2.0)], 1), 0.9)) == [pytest.approx(1.8)]

    def test_composition(self):
        M = menu([([1, 0], 2.0), ([0, 1], 3.0)], 2)
        a = prices(scale_prices(scale_prices(M, 0.9), 0.8))
        assert a == pytest.approx(prices(scale_prices(M, 0.72)), abs=1e-15)

    def test_rejects_bad_factor(self):
        with pytest.raises(ValueError):
            scale_prices(SymmetricMenu.empty(1), 1.5)


class TestExclusive:
    def test_split_expensive_bundle(self):
        out = make_exclusive(menu([([1, 1], 10.0)], 2), E=5.0, eps=0.1)
        got = sorted((tuple(o.alloc), o.price) for *_, o in out.iter_options())
        assert got == [((0.0, 1.0), pytest.approx(9.0)), ((1.0, 0.0), pytest.approx(9.0))]

    def test_cheap_kept(self):
        out = make_exclusive(menu([([1, 1], 4.0)], 2), E=5.0, eps=0.1)
        (o,) = [o for *_, o in out.iter_options()]
        assert o.alloc.tolist() == [1, 1] and o.price == pytest.approx(3.6)

    def test_empty(self):
        assert make_exclusive(SymmetricMenu.empty(2), 1.0, 0.1) == SymmetricMenu.empty(2)

    def test_concat_onto_empty(self):
        out = concat_exclusive(SymmetricMenu.empty(1), 100.0, [5.0], 0.1)
        (o,) = [o for *_, o in out.iter_options()]
        assert o.alloc.tolist() == [1.0] and o.price == pytest.approx(4.5)

    def test_concat_formula(self):
        out = concat_exclusive(menu([([0.4], 1.0)], 1), 100.0, [50.0], 0.1)
        assert prices(out) == pytest.approx([0.9, 0.9 * (1.0 + 0.6 * 50.0)])

    def test_concat_without_reserves(self):
        M = menu([([1, 0], 2.0)], 2)
        assert prices(concat_exclusive(M, 10.0, [None, None], 0.1)) == pytest.approx([1.8])


class TestPruning:
    def test_lower_unit_price_wins(self):
        out = prune_dominated(menu([([1], 2.0), ([0.5], 1.5)], 1))
        assert [o.price for *_, o in out.iter_options()] == [2.0]

    def test_identical_keeps_one(self):
        assert prune_dominated(menu([([1], 2.0), ([1], 2.0)], 1)).num_options == 1

    def test_undominated_kept(self):
        assert prune_dominated(menu([([1], 2.0), ([0.5], 0.5)], 1)).num_options == 2

    def test_multi_item_untouched(self):
        M = menu([([1, 1], 9.0), ([1, 0], 1.0)], 2)
        assert prune_dominated(M).num_options == 2


class TestComplexity:
    def test_three_singletons(self):
        M = menu([([1, 0, 0], 1.0), ([0, 1, 0], 1.0), ([0, 0, 1], 1.0)], 3)
        assert tuple(complexity_measures(M)) == (3, 3, 3)

    def test_mixed_groups_have_no_ssmc(self):
        a = SymmetricComponent(ItemPermutationGroup.trivial(2), (MenuOption(np.array([1.0, 0.0]), 1.0),))
        b = SymmetricComponent(ItemPermutationGroup.full(2), (MenuOption(np.array([1.0, 0.0]), 2.0),))
        c = complexity_measures(SymmetricMenu((a, b), 2))
        assert c.ssmc is None and c.wsmc == 2 and c.mc == 3

    def test_orbit_size_matches_enumeration(self):
        rng = np.random.default_rng(12)
        for n in range(1, 7):
            g = ItemPermutationGroup.full(n)
            x = rng.integers(0, 3, n) / 2
            distinct = {tuple(x[list(p)]) for p in itertools.permutations(range(n))}
            assert orbit_size(x, g) == len(distinct)

    def test_expand_orbits_same_revenue(self):
        D = iid(make_marginal([0, 1, 3], [0.2, 0.5, 0.3]), 3, 2)
        M = menu([([1, 0.5, 0], 1.2), ([1, 1, 0], 2.5)], 3, ItemPermutationGroup.full(3))
        E = expand_orbits(M)
        assert E.num_options == complexity_measures(M).mc
        assert revenue_exact(E, D) == pytest.approx(revenue_exact(M, D), abs=1e-12)
