import numpy as np
import pytest

from menuforge.benchmarks import (
    benchmark_report,
    brev,
    exclusive_revenue,
    monopoly_price,
    srev,
    srev_star,
    srev_star_uniform,
)
from menuforge.dist import iid, make_marginal, make_product, point_mass
from menuforge.errors import UnsupportedClass
from menuforge.menu import MenuOption, SymmetricMenu, revenue_exact

U12 = make_marginal([1, 2], [0.5, 0.5])


class TestMonopoly:
    def test_tie_goes_to_lower_price(self):
        assert tuple(monopoly_price(U12)) == (1.0, 1.0)

    def test_floor(self):
        assert tuple(monopoly_price(U12, 1.5)) == (2.0, 1.0)

    def test_point_mass(self):
        assert tuple(monopoly_price(point_mass(3))) == (3.0, 3.0)

    def test_nothing_above_floor(self):
        p = monopoly_price(U12, 5.0)
        assert p.price is None and p.revenue == 0


class TestBundle:
    def test_deterministic_additive(self):
        b = brev(make_product([point_mass(1), point_mass(1)], 2))
        assert (b.price, b.revenue, b.stderr) == (2.0, 2.0, 0.0)

    def test_single_item(self):
        assert brev(make_product([U12], 1)).revenue == 1.0

    def test_unit_demand_max(self):
        # bundle value is the max: price 1 earns 1, price 2 earns 2 * 3/4
        b = brev(iid(U12, 2, 1))
        assert b.price == 2.0 and b.revenue == pytest.approx(1.5)

    def test_mc_close_to_exact(self):
        D = iid(make_marginal([0, 1, 3], [0.3, 0.4, 0.3]), 5, 5)
        ex = brev(D)
        mc = brev(D, samples=50_000, seed=1, mode="mc")
        assert mc.revenue <= ex.revenue + 4 * mc.stderr
        assert mc.revenue >= 0.95 * ex.revenue


class TestSeparate:
    def test_additive_sum_of_monopolies(self):
        assert srev(iid(U12, 2, 2)).revenue == 2.0

    def test_point_masses(self):
        assert srev(make_product([point_mass(1), point_mass(2)], 2)).revenue == 3.0

    def test_unit_demand_delegates(self):
        D = iid(U12, 2, 1)
        assert srev(D).revenue == srev_star(D).revenue

    def test_general_k_unsupported(self):
        with pytest.raises(UnsupportedClass):
            srev(iid(U12, 3, 2))


class TestExclusive:
    def test_single_item(self):
        assert srev_star_uniform(make_product([U12], 1)).revenue == 1.0

    def test_uniform_price_closed_form(self):
        # 2 * (1 - (1/2)^2)
        p = srev_star_uniform(iid(U12, 2, 1))
        assert p.price == 2.0 and p.revenue == pytest.approx(1.5)

    def test_exact_small_dominates_uniform(self):
        D = make_product([([1, 4], [0.5, 0.5]), ([2, 3], [0.3, 0.7])], 1)
        assert srev_star(D, "exact_small").revenue >= srev_star_uniform(D).revenue - 1e-12

    def test_exclusive_revenue_matches_menu(self):
        D = make_product([([1, 4], [0.5, 0.5]), ([2, 3], [0.3, 0.7])], 2)
        prices = np.array([3.0, 2.0])
        M = SymmetricMenu.from_options(
            [MenuOption(np.array([1.0, 0.0]), 3.0), MenuOption(np.array([0.0, 1.0]), 2.0)], 2
        )
        assert exclusive_revenue(D, prices) == pytest.approx(revenue_exact(M, D), abs=1e-12)


def test_report_fields():
    r = benchmark_report(iid(U12, 2, 2))
    assert r.srev.revenue == 2.0 and len(r.per_item_monopoly) == 2
    assert r.srev_star_exact is not None
