"""A hard additive instance where posted prices and symmetrisation all lose.

Each item has a small chance of a large value (1 on even items, 1/2 on odd
items) plus its own half of a shared geometric grid of tiny values. Which
half is fixed by a balanced 0/1 pattern per item; patterns are kept far
apart so no two items look alike.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .benchmarks import brev
from .dist import Marginal, ProductDistribution, make_marginal
from .errors import InvalidDistribution, NegativeMass, SeparationFailed


@dataclass(frozen=True, eq=False)
class BarrierSpec:
    n: int
    eps: float
    seed: int
    k: int
    patterns: np.ndarray  # (n, k) 0/1 matrix, k/2 ones per row
    separation: str

    def grid_value(self, level: int) -> float:
        return self.eps * (1 - self.eps) ** level / math.log(self.n)

    def grid_mass(self, level: int) -> float:
        return math.log(self.n) * (1 - self.eps) ** (-level) / (self.n * self.k)


@dataclass(frozen=True)
class FeatureReport:
    val: float
    val_target: float
    val_ok: bool
    srev_at_reference: float
    srev_target: float
    srev_ok: bool
    worst_grid_revenue: float
    grid_bound: float
    grid_ok: bool
    max_value: float
    bounded_ok: bool
    min_zero_mass: float
    masses_ok: bool
    separation_ok: bool
    brev_estimate: float | None
    brev_stderr: float | None


def default_k(n: int, eps: float) -> int:
    """``ln(n / ln n) / eps + 1`` rounded to the nearest even integer, at least 2."""
    raw = math.log(n / math.log(n)) / eps + 1
    return max(2, 2 * round(raw / 2))


def _separation(patterns: np.ndarray, row: int, candidate: np.ndarray, mode: str) -> int:
    """Smallest separation between ``candidate`` and rows ``< row``."""
    if row == 0:
        return patterns.shape[1]
    prev = patterns[:row]
    if mode == "hamming":
        return int((prev != candidate).sum(axis=1).min())
    # ones of each vector missing from the other, both directions
    a = ((candidate == 1) & (prev == 0)).sum(axis=1)
    b = ((prev == 1) & (candidate == 0)).sum(axis=1)
    return int(np.minimum(a, b).min())


def separation_holds(patterns: np.ndarray, mode: str = "hamming") -> bool:
    k = patterns.shape[1]
    return all(_separation(patterns, i, patterns[i], mode) >= k / 6 for i in range(1, patterns.shape[0]))


def gen_barrier(
    n: int,
    eps: float,
    seed: int = 0,
    max_retries: int = 10_000,
    k: int | None = None,
    separation: str = "hamming",
) -> tuple[ProductDistribution, BarrierSpec]:
    """Sample balanced patterns and build the additive barrier instance.

    Patterns are drawn one at a time and redrawn until they differ from all
    earlier ones in at least ``k/6`` coordinates (``separation="hamming"``),
    or, with ``"one_sided"``, until each has ``k/6`` ones the other lacks.
    """
    if n % 2 or n < 64:
        raise InvalidDistribution(f"n must be even and at least 64, got {n}")
    if not 0 < eps < 1:
        raise InvalidDistribution(f"eps must lie in (0, 1), got {eps}")
    if separation not in ("hamming", "one_sided"):
        raise ValueError(f"unknown separation {separation!r}")
    k = default_k(n, eps) if k is None else int(k)
    if k < 2 or k % 2:
        raise InvalidDistribution(f"k must be an even integer >= 2, got {k}")

    rng = np.random.default_rng(seed)
    patterns = np.zeros((n, k), dtype=np.int8)
    retries = 0
    for i in range(n):
        while True:
            cand = np.zeros(k, dtype=np.int8)
            cand[rng.choice(k, k // 2, replace=False)] = 1
            if _separation(patterns, i, cand, separation) >= k / 6:
                patterns[i] = cand
                break
            retries += 1
            if retries > max_retries:
                raise SeparationFailed(f"placed {i} of {n} patterns before exhausting {max_retries} retries")

    spec = BarrierSpec(n, eps, seed, k, patterns, separation)
    marginals = []
    for i in range(n):
        big_v, big_p = (1.0, eps / n) if i % 2 == 0 else (0.5, 2 * eps / n)
        levels = np.flatnonzero(patterns[i])
        values = [spec.grid_value(int(l)) for l in levels] + [big_v]
        probs = [spec.grid_mass(int(l)) for l in levels] + [big_p]
        zero = 1.0 - math.fsum(probs)
        if zero < 0:
            raise NegativeMass(f"item {i}: atoms carry {1 - zero:.6g} > 1 mass; (n, eps) combination is invalid")
        marginals.append(make_marginal([0.0] + values, [zero] + probs))
    return ProductDistribution(tuple(marginals), n), spec


def reference_prices(n: int) -> np.ndarray:
    return np.where(np.arange(n) % 2 == 0, 1.0, 0.5)


def _posted(m: Marginal, price: float) -> float:
    return price * m.tail(price)


def check_features(
    D: ProductDistribution,
    spec: BarrierSpec,
    brev_samples: int = 20_000,
    seed: int = 0,
) -> FeatureReport:
    """Recompute the instance's checkable constants.

    Expected value, revenue at the reference prices, the grid-price bound,
    the value bound and mass validity are exact. The grand-bundle revenue is
    a Monte Carlo estimate (skipped when ``brev_samples`` is 0).
    """
    n, eps = spec.n, spec.eps
    val = math.fsum(m.mean() for m in D.marginals)
    prices = reference_prices(n)
    srev = math.fsum(_posted(m, p) for m, p in zip(D.marginals, prices))
    grid = [spec.grid_value(j) for j in range(spec.k)]
    worst = max(_posted(m, x) for m in D.marginals for x in grid)
    max_value = D.max_value()
    zeros = [float(m.probs[0]) if m.values[0] == 0 else 0.0 for m in D.marginals]
    masses_ok = all(
        np.all(m.probs >= 0) and abs(math.fsum(m.probs.tolist()) - 1.0) <= 1e-12 for m in D.marginals
    )
    b = brev(D, samples=brev_samples, seed=seed, mode="mc") if brev_samples else None
    return FeatureReport(
        val=val,
        val_target=1.5 * eps,
        val_ok=abs(val - 1.5 * eps) <= 1e-9,
        srev_at_reference=srev,
        srev_target=eps,
        srev_ok=abs(srev - eps) <= 1e-9,
        worst_grid_revenue=worst,
        grid_bound=eps / n,
        grid_ok=worst <= eps / n + 1e-12,
        max_value=max_value,
        bounded_ok=max_value <= 1.0,
        min_zero_mass=min(zeros),
        masses_ok=masses_ok and min(zeros) >= 0,
        separation_ok=separation_holds(spec.patterns, spec.separation),
        brev_estimate=None if b is None else b.revenue,
        brev_stderr=None if b is None else b.stderr,
    )
