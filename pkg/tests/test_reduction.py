import numpy as np
import pytest

from gen import random_instance
from menuforge.dist import make_marginal, make_product, point_mass
from menuforge.errors import DegenerateInstance
from menuforge.reduction import ReductionConfig, run_reduction, select_params, structure_check


class TestParams:
    def test_ledger_arithmetic(self):
        # exclusive and bundle benchmarks are both 1
        p = select_params(make_product([point_mass(1)], 1), 0.1, safety=2)
        assert (p.H, p.E, p.T) == (pytest.approx(20), pytest.approx(2000), pytest.approx(20000))

    def test_no_tail(self):
        p = select_params(make_product([([1, 2], [0.5, 0.5])] * 2, 2), 0.1)
        assert p.p == (0.0, 0.0) and p.r == (None, None)

    def test_threshold_monotone_in_eps(self):
        D = make_product([([1, 2, 9], [0.5, 0.3, 0.2])] * 2, 1)
        Ts = [select_params(D, e).T for e in (0.5, 0.3, 0.2, 0.1, 0.05)]
        assert Ts == sorted(Ts)

    def test_eps_range(self):
        with pytest.raises(ValueError):
            select_params(make_product([point_mass(1)], 1), 0.7)

    def test_degenerate(self):
        with pytest.raises(DegenerateInstance):
            select_params(make_product([point_mass(0)], 1), 0.1)


class TestPipeline:
    def test_bounded_instance_matches_discounts(self):
        rng = np.random.default_rng(17)
        for _ in range(6):
            n = int(rng.integers(1, 4))
            D = random_instance(rng, n, 3, int(rng.integers(1, n + 1)))
            if D.max_value() == 0:
                continue
            for nudge, power in ((False, 2), (True, 3)):
                rep = run_reduction(D, 0.1, ReductionConfig(nudge=nudge))
                assert len(rep.final_menu.components) == len(rep.bounded_menu.components)
                # the discretised instance loses about 1e-6 of the optimum
                assert rep.ratio >= 0.9**power - 1e-6

    def test_heavy_tail_gets_exclusive_option(self):
        D = make_product([([1.0, 1e6], [1 - 1e-6, 1e-6])], 1)
        rep = run_reduction(D, 0.1)
        assert rep.params.r == (1e6,)
        top = max(o.price for *_, o in rep.final_menu.iter_options())
        assert top >= 0.9 * 1e6
        assert all(structure_check(rep).values())

    def test_deterministic(self):
        D = make_product([([1, 2, 4], [0.5, 0.3, 0.2]), ([0, 3], [0.4, 0.6])], 2)
        a, b = run_reduction(D, 0.2, ReductionConfig(seed=3)), run_reduction(D, 0.2, ReductionConfig(seed=3))
        assert a.final_menu == b.final_menu and a.revenue == b.revenue

    def test_mc_evaluation_path(self):
        D = make_product([([1, 2, 4], [0.5, 0.3, 0.2]), ([0, 3], [0.4, 0.6])], 2)
        rep = run_reduction(D, 0.2, ReductionConfig(support_cap=2, eval_samples=20_000, with_oracle=False))
        assert not rep.revenue_exact and rep.revenue.stderr > 0 and rep.ratio is None
