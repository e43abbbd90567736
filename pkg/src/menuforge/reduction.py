"""From an unbounded instance to a menu: truncate, solve bounded, re-attach the tail.

The pipeline picks thresholds ``E < T`` from posted-price benchmarks,
truncates values at ``T``, solves the leftover-weighted revenue problem on a
discretised copy of the truncated instance, then makes the result exclusive
above ``E`` and appends one deterministic single-item option per item that
has mass above ``T``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .benchmarks import brev, monopoly_price, srev_star_uniform
from .discretize import DiscretizationParams, canonical_discretize, discretize_weights
from .dist import SUPPORT_CAP, Estimate, ProductDistribution, truncate
from .errors import DegenerateInstance, SupportTooLarge
from .menu import (
    Complexity,
    SymmetricMenu,
    complexity_measures,
    concat_exclusive,
    make_exclusive,
    prune_dominated,
    revenue_exact,
    revenue_mc,
    scale_prices,
)
from .oracle import ORACLE_CAP, brute_force_optimal
from .symmetric_lp import REP_CAP, solve_modrev


@dataclass(frozen=True)
class ReductionParams:
    eps: float
    H: float
    E: float
    T: float
    p: tuple[float, ...]  # best tail revenue at prices >= T
    r: tuple[float | None, ...]  # the price achieving it, None without tail mass
    w: tuple[float, ...]
    srev_star_lower: float
    brev: float
    rev_proxy: float
    safety: float


@dataclass(frozen=True)
class ReductionConfig:
    safety: float = 2.0
    c_delta: float = 1.0
    brev_samples: int = 100_000
    seed: int = 0
    rep_cap: int = REP_CAP
    support_cap: int = SUPPORT_CAP
    eval_samples: int = 100_000
    oracle_cap: int = ORACLE_CAP
    with_oracle: bool = True
    tolerance: float = 1e-9
    lp_method: str = "auto"
    threads: int = 1
    # discount prices once more to carry the menu from the discretised copy back
    nudge: bool = True


@dataclass(frozen=True, eq=False)
class ReductionReport:
    params: ReductionParams
    delta: float | None
    t: float
    shortcut: bool  # bounded menu replaced by the empty menu
    bounded_objective: float
    bounded_menu: SymmetricMenu
    final_menu: SymmetricMenu
    revenue: Estimate
    revenue_exact: bool
    oracle_revenue: float | None
    complexity_bounded: Complexity
    complexity_final: Complexity
    num_reps: int
    blocks: tuple[tuple[int, ...], ...] = field(default=())

    @property
    def ratio(self) -> float | None:
        if self.oracle_revenue is None or self.oracle_revenue <= 0:
            return None
        return self.revenue.value / self.oracle_revenue


def select_params(
    D: ProductDistribution, eps: float, safety: float = 2.0, brev_samples: int = 100_000, seed: int = 0
) -> ReductionParams:
    if not 0 < eps <= 0.5:
        raise ValueError(f"eps must lie in (0, 1/2], got {eps}")
    sl = srev_star_uniform(D).revenue
    b = brev(D, brev_samples, seed).revenue
    if sl <= 0 and b <= 0:
        raise DegenerateInstance("every benchmark is zero: the instance has no value to sell")
    H = safety * sl / eps
    E = max(H / eps**2, b / eps)
    T = E / eps
    p, r = [], []
    for m in D.marginals:
        price, rev = monopoly_price(m, T)
        p.append(rev)
        r.append(price)
    # w_i = r_i Pr[v_i >= r_i], which is the tail revenue itself
    return ReductionParams(eps, H, E, T, tuple(p), tuple(r), tuple(p), sl, b, max(sl, b), safety)


def run_reduction(D: ProductDistribution, eps: float, config: ReductionConfig = ReductionConfig()) -> ReductionReport:
    params = select_params(D, eps, config.safety, config.brev_samples, config.seed)
    n, k = D.n, D.k
    R = params.rev_proxy
    t = params.T / R
    w = np.array(params.w)
    DT = truncate(D, params.T)

    if np.any(w >= R / eps):
        shortcut, delta = True, None
        bounded = SymmetricMenu.empty(n)
        bounded_obj = float(w.sum())
        num_reps, blocks = 0, ()
    else:
        shortcut = False
        delta = config.c_delta * eps**2 / (t * k)
        dp = DiscretizationParams(delta, t, R, k, n)
        Dd, _ = canonical_discretize(DT, dp)
        wd = discretize_weights(w, delta, eps * R / n)
        sol = solve_modrev(Dd, wd, rep_cap=config.rep_cap, tolerance=config.tolerance, method=config.lp_method)
        bounded, bounded_obj = sol.menu, sol.objective
        num_reps, blocks = sol.num_reps, sol.group.blocks

    scaled = scale_prices(bounded, 1.0 - eps) if config.nudge else bounded
    final = concat_exclusive(make_exclusive(scaled, params.E, eps), params.T, params.r, eps)
    final = prune_dominated(final)

    if D.support_size() <= config.support_cap:
        rev, is_exact = Estimate(revenue_exact(final, D, config.support_cap), 0.0), True
    else:
        rev, is_exact = revenue_mc(final, D, config.eval_samples, config.seed, config.threads), False

    oracle = None
    if config.with_oracle and D.support_size() <= config.oracle_cap:
        try:
            oracle = brute_force_optimal(D, cap=config.oracle_cap, tolerance=config.tolerance).objective
        except SupportTooLarge:
            oracle = None

    return ReductionReport(
        params=params,
        delta=delta,
        t=t,
        shortcut=shortcut,
        bounded_objective=bounded_obj,
        bounded_menu=bounded,
        final_menu=final,
        revenue=rev,
        revenue_exact=is_exact,
        oracle_revenue=oracle,
        complexity_bounded=complexity_measures(bounded),
        complexity_final=complexity_measures(final),
        num_reps=num_reps,
        blocks=blocks,
    )


def structure_check(report: ReductionReport) -> dict[str, bool]:
    """The final menu's shape guarantees, each as a boolean."""
    eps, E = report.params.eps, report.params.E
    n = report.final_menu.n
    multi_ok, det_above = True, 0
    for _, _, _, o in report.final_menu.iter_options():
        pos = int(np.count_nonzero(o.alloc > 0))
        if pos > 1 and o.price > (1 - eps) ** 2 * E * (1 + 1e-12):
            multi_ok = False
        if pos == 1 and o.price > E and o.alloc.max() == 1.0:
            det_above += 1
    mc_b, mc_f = report.complexity_bounded.mc, report.complexity_final.mc
    return {
        "multi_item_cheap": multi_ok,
        "few_exclusive": det_above <= n,
        "mc_bound": mc_b is not None and mc_f is not None and mc_f <= n * mc_b + n,
        "wsmc_bound": report.complexity_final.wsmc <= n * report.complexity_bounded.wsmc + n,
    }

