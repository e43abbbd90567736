"""Identical items shrink the revenue LP.

Six unit-demand items share one two-point value distribution. The full
support has 64 value vectors, but sorting each vector leaves only 7 classes,
and the LP over classes reaches the same optimum as the LP over all 64.
"""

import time

from menuforge import brute_force_optimal, iid, make_marginal, solve_modrev
from menuforge.benchmarks import brev, srev_star

D = iid(make_marginal([1.0, 3.0], [0.6, 0.4]), n=6, k=1)
print(f"support size: {D.support_size()}")

t = time.perf_counter()
fast = solve_modrev(D)
t_fast = time.perf_counter() - t
t = time.perf_counter()
slow = brute_force_optimal(D)
t_slow = time.perf_counter() - t

print(f"classes: {fast.num_reps:3d}  LP {fast.lp_vars} vars x {fast.lp_rows} rows  objective {fast.objective:.6f}  ({t_fast:.2f}s)")
print(f"points:  {slow.num_reps:3d}  LP {slow.lp_vars} vars x {slow.lp_rows} rows  objective {slow.objective:.6f}  ({t_slow:.2f}s)")

print("\nbenchmarks for comparison")
print(f"  sell one item at a time: {srev_star(D, 'exact_small').revenue:.6f}")
print(f"  grand bundle:            {brev(D).revenue:.6f}")

print("\noptimal menu (one representative per orbit)")
for *_, o in fast.menu.iter_options():
    print(f"  x = {o.alloc.round(4).tolist()}  price {o.price:.4f}")
