"""Discounting a menu makes it robust to a nearby distribution.

Discretise a small instance, then compare the optimal menu's revenue on the
original with the discounted menu's revenue on the discretised copy. The gap
never exceeds the menu-specific coupling error divided by the discount.
"""

import numpy as np

from menuforge import DiscretizationParams, canonical_discretize, delta_bound, delta_m, make_product
from menuforge import revenue_exact, scale_prices, solve_modrev
from menuforge.benchmarks import brev, srev_star_uniform

D = make_product([([0.7, 1.3, 2.9], [0.5, 0.3, 0.2]), ([1.1, 2.2], [0.6, 0.4])], k=2)
R = max(srev_star_uniform(D).revenue, brev(D).revenue)
M = solve_modrev(D).menu
base = revenue_exact(M, D)
print(f"optimal revenue on D: {base:.6f}")

for delta in (0.02, 0.05, 0.1):
    params = DiscretizationParams(delta, D.max_value() / R, R, D.k, D.n)
    Dd, coupling = canonical_discretize(D, params)
    dm = delta_m(coupling, M).value
    print(f"delta={delta}: support {D.support_size()} -> {Dd.support_size()},"
          f" coupling error {delta_bound(coupling):.4f}, for this menu {dm:.4f}")
    for eps in (0.1, 0.3, 0.5):
        lhs = revenue_exact(scale_prices(M, 1 - eps), Dd)
        rhs = (1 - eps) * base - dm / eps
        print(f"  eps={eps}: discounted revenue {lhs:.6f} >= {rhs:.6f}  slack {lhs - rhs:.2e}")
