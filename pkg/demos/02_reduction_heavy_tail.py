"""A rare, enormous value and the truncate/solve/re-attach pipeline.

Item 0 is usually worth 1 or 2 but, once in 20,000 draws, worth 5,000. The
pipeline caps values at a threshold T, solves the capped instance, then adds
one expensive take-it-or-leave-it option per item with tail mass.
"""

import numpy as np

from menuforge import ReductionConfig, make_product, run_reduction
from menuforge.reduction import structure_check

D = make_product(
    [
        ([1.0, 2.0, 5000.0], [0.6, 0.4 - 5e-5, 5e-5]),
        ([0.5, 1.5, 3.0], [0.3, 0.4, 0.3]),
    ],
    k=2,
)

for eps in (0.3, 0.2, 0.1):
    rep = run_reduction(D, eps, ReductionConfig(seed=1))
    p = rep.params
    print(f"eps={eps}: H={p.H:.4g} E={p.E:.4g} T={p.T:.4g}  tail reserves {p.r}")
    print(f"  revenue {rep.revenue.value:.6f} vs optimum {rep.oracle_revenue:.6f}  ratio {rep.ratio:.3f}"
          f"  (three (1-eps) discounts give {(1 - eps) ** 3:.3f})")
    print(f"  menu complexity bounded {rep.complexity_bounded.mc} -> final {rep.complexity_final.mc};"
          f" checks {structure_check(rep)}")

print("\nfinal menu at eps=0.1 (distinct options)")
seen = set()
for *_, o in rep.final_menu.iter_options():
    key = (tuple(np.round(o.alloc, 4).tolist()), round(o.price, 4))
    if key not in seen:
        seen.add(key)
        print(f"  x = {list(key[0])}  price {key[1]:.4f}")
