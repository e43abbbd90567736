"""Posted-price benchmarks: per-item monopoly prices, SRev, SRev* and BRev."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .dist import SUPPORT_CAP, Marginal, ProductDistribution, iter_support, sample_many, top_k_sum
from .errors import BudgetExceeded, UnsupportedClass
from .menu import TIE_TOL

BREV_SAMPLES = 100_000
BREV_QUANTILES = 200
# grid points times support points allowed for the exhaustive SRev* search
GRID_BUDGET = 2_000_000
_REL_TIE = 1e-12


class PostedPrice(NamedTuple):
    price: float | None
    revenue: float


class PriceVector(NamedTuple):
    prices: np.ndarray  # inf marks an item that is not offered
    revenue: float


class BRev(NamedTuple):
    price: float | None
    revenue: float
    stderr: float  # 0 on the exact path


@dataclass(frozen=True)
class BenchmarkReport:
    srev: PriceVector | None
    brev: BRev
    srev_star_lower: PostedPrice
    srev_star_exact: PriceVector | None
    per_item_monopoly: tuple[PostedPrice, ...]


def _best_price(prices: np.ndarray, revs: np.ndarray) -> tuple[float | None, float]:
    """Revenue-maximising candidate; near-ties go to the smaller price."""
    if prices.size == 0:
        return None, 0.0
    best = revs.max()
    ok = revs >= best - _REL_TIE * max(abs(best), 1e-300)
    i = int(np.flatnonzero(ok)[np.argmin(prices[ok])])
    return float(prices[i]), float(revs[i])


def monopoly_price(m: Marginal, floor: float = 0.0) -> PostedPrice:
    """Best posted price among atoms at or above ``floor``.

    Returns ``(None, 0.0)`` when no atom reaches the floor.
    """
    if floor < 0:
        raise ValueError("floor must be non-negative")
    tails = np.cumsum(m.probs[::-1])[::-1]
    keep = m.values >= floor
    return PostedPrice(*_best_price(m.values[keep], m.values[keep] * tails[keep]))


def brev(
    D: ProductDistribution,
    samples: int = BREV_SAMPLES,
    seed: int = 0,
    cap: int = SUPPORT_CAP,
    quantiles: int = BREV_QUANTILES,
    mode: str = "auto",
) -> BRev:
    """Best single price for the grand bundle.

    Exact over the distinct bundle values when the support is enumerable;
    otherwise the best of ``quantiles`` empirical quantiles of sampled
    bundle values.
    """
    if mode not in ("auto", "exact", "mc"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode == "exact" or (mode == "auto" and D.support_size() <= cap):
        vals, probs = [], []
        for V, P in iter_support(D, cap):
            vals.append(top_k_sum(V, D.k))
            probs.append(P)
        vals = np.concatenate(vals)
        probs = np.concatenate(probs)
        uniq, inv = np.unique(vals, return_inverse=True)
        mass = np.bincount(inv, weights=probs)
        tails = np.cumsum(mass[::-1])[::-1]
        keep = uniq > 0
        price, rev = _best_price(uniq[keep], uniq[keep] * tails[keep])
        return BRev(price, rev, 0.0)
    vals = top_k_sum(sample_many(D, samples, seed), D.k)
    cand = np.unique(np.quantile(vals, np.linspace(0.0, 1.0, quantiles), method="inverted_cdf"))
    cand = cand[cand > 0]
    srt = np.sort(vals)
    tails = 1.0 - np.searchsorted(srt, cand, side="left") / samples
    price, rev = _best_price(cand, cand * tails)
    if price is None:
        return BRev(None, 0.0, 0.0)
    paid = np.where(vals >= price, price, 0.0)
    return BRev(price, rev, float(paid.std(ddof=1) / math.sqrt(samples)))


def srev_star_uniform(D: ProductDistribution) -> PostedPrice:
    """Best common price on every item when the buyer may take at most one."""
    grid = np.unique(np.concatenate([m.values for m in D.marginals]))
    grid = grid[grid > 0]
    below = np.ones_like(grid)
    for m in D.marginals:
        cdf = np.concatenate([[0.0], np.cumsum(m.probs)])
        below *= cdf[np.searchsorted(m.values, grid, side="left")]
    sold = np.clip(1.0 - below, 0.0, 1.0)
    return PostedPrice(*_best_price(grid, grid * sold))


def exclusive_revenue(
    D: ProductDistribution, prices: np.ndarray, cap: int = SUPPORT_CAP, tie_tol: float = TIE_TOL
) -> float:
    """Revenue of item prices when the buyer takes at most one item.

    Ties follow the menu convention: higher price first, then lower index.
    """
    prices = np.asarray(prices, dtype=np.float64)
    total = 0.0
    for V, P in iter_support(D, cap):
        total += float(_exclusive_paid(V, prices, tie_tol) @ P)
    return total


def _exclusive_paid(V: np.ndarray, prices: np.ndarray, tie_tol: float) -> np.ndarray:
    util = V - prices  # -inf for items not offered
    best = np.maximum(util.max(axis=1), 0.0)
    tol = tie_tol * np.maximum(1.0, V.max(axis=1))
    cand = util >= (best - tol)[:, None]
    score = np.where(cand, prices, -np.inf)
    pick = score.argmax(axis=1)
    bought = cand[np.arange(V.shape[0]), pick]
    return np.where(bought, prices[pick], 0.0)


def srev_star(
    D: ProductDistribution, mode: str = "uniform_lower", budget: int = GRID_BUDGET, cap: int = SUPPORT_CAP
) -> PriceVector:
    """Selling exclusively: the buyer buys at most one item.

    ``uniform_lower`` uses the best common price (a lower bound);
    ``exact_small`` searches every price vector over atoms and "not offered".
    """
    if mode == "uniform_lower":
        p, rev = srev_star_uniform(D)
        return PriceVector(np.full(D.n, np.inf if p is None else p), rev)
    if mode != "exact_small":
        raise ValueError(f"unknown mode {mode!r}")
    grids = [np.append(m.values[m.values > 0], np.inf) for m in D.marginals]
    n_grid = math.prod(g.size for g in grids)
    size = D.support_size()
    if n_grid * size > budget or size > cap:
        raise BudgetExceeded(f"exhaustive SRev* needs {n_grid} x {size} evaluations, budget {budget}")
    blocks = list(iter_support(D, cap))
    best_rev, best_p = -1.0, None
    for combo in itertools.product(*grids):
        p = np.array(combo)
        rev = sum(float(_exclusive_paid(V, p, TIE_TOL) @ P) for V, P in blocks)
        if rev > best_rev * (1 + _REL_TIE):
            best_rev, best_p = rev, p
    return PriceVector(best_p, best_rev)


def srev(D: ProductDistribution, mode: str = "uniform_lower") -> PriceVector:
    """Selling separately.

    Additive buyers decompose into per-item monopoly prices; for unit-demand
    buyers this coincides with :func:`srev_star` (called with ``mode``).
    """
    if D.is_additive:
        mono = [monopoly_price(m) for m in D.marginals]
        prices = np.array([np.inf if r.price is None else r.price for r in mono])
        return PriceVector(prices, math.fsum(r.revenue for r in mono))
    if D.is_unit_demand:
        return srev_star(D, mode)
    raise UnsupportedClass(f"selling separately is not decomposable for k={D.k} with n={D.n}")


def benchmark_report(
    D: ProductDistribution,
    samples: int = BREV_SAMPLES,
    seed: int = 0,
    cap: int = SUPPORT_CAP,
    exact_budget: int = GRID_BUDGET,
) -> BenchmarkReport:
    try:
        s = srev(D)
    except UnsupportedClass:
        s = None
    try:
        exact = srev_star(D, "exact_small", exact_budget, cap)
    except BudgetExceeded:
        exact = None
    return BenchmarkReport(
        srev=s,
        brev=brev(D, samples, seed, cap),
        srev_star_lower=srev_star_uniform(D),
        srev_star_exact=exact,
        per_item_monopoly=tuple(monopoly_price(m) for m in D.marginals),
    )
