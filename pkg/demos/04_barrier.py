"""The hard additive instance where every shortcut loses.

Each item hides half of a shared geometric grid of tiny values behind a
balanced pattern. Posting prices of 1 and 1/2 earns exactly eps, no grid
price earns more than eps/n on any item, and the grand bundle falls short.
"""

import time

from menuforge import check_features, gen_barrier

t = time.perf_counter()
D, spec = gen_barrier(1000, 1 / 9, seed=0)
f = check_features(D, spec, brev_samples=20_000)
print(f"n={spec.n} eps={spec.eps:.4f} k={spec.k}  built and checked in {time.perf_counter() - t:.2f}s")
print(f"  expected total value  {f.val:.12f}  (target {f.val_target:.12f})")
print(f"  separate sales at 1, 1/2: {f.srev_at_reference:.12f}  (target {f.srev_target:.12f})")
print(f"  best grid-price revenue on one item {f.worst_grid_revenue:.3e} <= eps/n = {f.grid_bound:.3e}")
print(f"  grand bundle about {f.brev_estimate:.4f} +- {f.brev_stderr:.4f}")
print(f"  smallest mass on value 0: {f.min_zero_mass:.4f}; patterns separated: {f.separation_ok}")
