"""Optimal menus for symmetric discrete instances.

When items split into blocks of identical marginals (and equal leftover
weights), an optimal menu may be taken invariant under permuting items
within blocks. The LP then needs one variable set per equivalence class of
value vectors, represented by the member sorted descending within blocks
and weighted by the class's total mass.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .dist import PROB_TOL, ProductDistribution
from .errors import BudgetExceeded, InvalidDistribution, LengthMismatch, NumericalFailure
from .lp import GE, LE, LPBuilder, LPModel, LPStatus, lp_solve
from .menu import ItemPermutationGroup, MenuOption, SymmetricComponent, SymmetricMenu

REP_CAP = 200_000
# primal entries this close to 0 or 1 are snapped
CLEAN_TOL = 1e-11


class CanonicalRep(NamedTuple):
    values: np.ndarray
    mass: float  # total probability of the class
    count: int  # number of value vectors in the class


@dataclass(frozen=True, eq=False)
class ModRevSolution:
    menu: SymmetricMenu
    objective: float
    num_reps: int
    group: ItemPermutationGroup
    lp_vars: int
    lp_rows: int
    method: str


def group_items(
    D: ProductDistribution, w: Sequence[float] | None = None, tol: float = PROB_TOL
) -> ItemPermutationGroup:
    """Block together items whose marginals and weights coincide within ``tol``."""
    w = np.zeros(D.n) if w is None else np.asarray(w, dtype=np.float64)
    if w.shape != (D.n,):
        raise LengthMismatch(f"{w.size} weights for {D.n} items")
    blocks: list[list[int]] = []
    for i, m in enumerate(D.marginals):
        for b in blocks:
            j = b[0]
            if abs(w[i] - w[j]) <= tol and m.close_to(D.marginals[j], tol):
                b.append(i)
                break
        else:
            blocks.append([i])
    return ItemPermutationGroup(tuple(tuple(b) for b in blocks))


def _check_symmetric(D: ProductDistribution, group: ItemPermutationGroup, tol: float = PROB_TOL):
    if group.n != D.n:
        raise LengthMismatch(f"group over {group.n} items, distribution over {D.n}")
    for b in group.blocks:
        first = D.marginals[b[0]]
        for i in b[1:]:
            if not D.marginals[i].close_to(first, tol):
                raise InvalidDistribution(f"items {b[0]} and {i} share a block but differ in distribution")


def count_reps(D: ProductDistribution, group: ItemPermutationGroup) -> int:
    """Number of classes: a multiset coefficient per block."""
    total = 1
    for b in group.blocks:
        s = D.marginals[b[0]].size
        total *= math.comb(len(b) + s - 1, s - 1)
    return total


def _compositions(total: int, parts: int):
    """All tuples of ``parts`` non-negative ints summing to ``total``."""
    for bars in itertools.combinations(range(total + parts - 1), parts - 1):
        prev = -1
        out = []
        for c in bars:
            out.append(c - prev - 1)
            prev = c
        out.append(total + parts - 1 - prev - 1)
        yield tuple(out)


def canonical_reps(
    D: ProductDistribution, group: ItemPermutationGroup, budget: int = REP_CAP
) -> list[CanonicalRep]:
    """One representative per class, sorted descending within each block."""
    _check_symmetric(D, group)
    total = count_reps(D, group)
    if total > budget:
        raise BudgetExceeded(f"{total} canonical representatives exceed the budget of {budget}")
    per_block = []
    for b in group.blocks:
        m = D.marginals[b[0]]
        opts = []
        for counts in _compositions(len(b), m.size):
            # values descending: largest atom first
            vals = np.repeat(m.values[::-1], counts[::-1])
            mult = math.factorial(len(b)) // math.prod(math.factorial(c) for c in counts)
            mass = math.prod(p**c for p, c in zip(m.probs.tolist(), counts))
            opts.append((vals, mult, mass))
        per_block.append(opts)
    reps = []
    for combo in itertools.product(*per_block):
        v = np.empty(D.n)
        count, mass = 1, 1.0
        for b, (vals, mult, pm) in zip(group.blocks, combo):
            v[list(b)] = vals
            count *= mult
            mass *= pm
        reps.append(CanonicalRep(v, count * mass, count))
    return reps


def build_modrev_lp(
    reps: Sequence[CanonicalRep], w: Sequence[float], k: int, group: ItemPermutationGroup
) -> LPModel:
    """The ModRevMax LP over canonical representatives.

    Variable layout: for rep ``r`` the price at ``r*(n+1)`` followed by
    ``n`` allocation probabilities; the ``n`` leftovers come last.
    """
    if not reps:
        raise ValueError("need at least one representative")
    n = group.n
    w = np.asarray(w, dtype=np.float64)
    lp = LPBuilder()
    P, X = [], []
    for rep in reps:
        P.append(lp.add_var(obj=rep.mass))
        X.append([lp.add_var(ub=1.0) for _ in range(n)])
    L = [lp.add_var(obj=w[i], ub=1.0) for i in range(n)]

    block_of = group.blocks
    for r, rep in enumerate(reps):
        x = X[r]
        # leftovers: nothing in i's orbit is awarded with probability above 1 - l_i
        for b in block_of:
            for i in b:
                for j in b:
                    lp.add_row({x[j]: 1.0, L[i]: 1.0}, LE, 1.0)
        lp.add_row({j: 1.0 for j in x}, LE, float(k))
        # allocation sorted like the representative within each block
        for b in block_of:
            for i, j in zip(b, b[1:]):
                lp.add_row({x[i]: 1.0, x[j]: -1.0}, GE, 0.0)
        ir = {x[i]: float(rep.values[i]) for i in range(n)}
        ir[P[r]] = -1.0
        lp.add_row(ir, GE, 0.0)
    for r, rep in enumerate(reps):
        v = rep.values
        for s in range(len(reps)):
            if s == r:
                continue
            row: dict[int, float] = {}
            for i in range(n):
                row[X[r][i]] = row.get(X[r][i], 0.0) + v[i]
                row[X[s][i]] = row.get(X[s][i], 0.0) - v[i]
            row[P[r]] = -1.0
            row[P[s]] = 1.0
            lp.add_row(row, GE, 0.0)
    return lp.build()


def _clean(a: np.ndarray) -> np.ndarray:
    a = np.where(np.abs(a) < CLEAN_TOL, 0.0, a)
    return np.where(np.abs(a - 1.0) < CLEAN_TOL, 1.0, a)


def solve_modrev(
    D: ProductDistribution,
    w: Sequence[float] | None = None,
    k: int | None = None,
    group: ItemPermutationGroup | None = None,
    rep_cap: int = REP_CAP,
    tolerance: float = 1e-9,
    method: str = "auto",
) -> ModRevSolution:
    """Maximise revenue plus weighted leftovers over all menus.

    The menu is a single symmetric component over ``group`` (by default the
    coarsest grouping of identical items) with one option per class that
    buys something.
    """
    w = np.zeros(D.n) if w is None else np.asarray(w, dtype=np.float64)
    if w.shape != (D.n,):
        raise LengthMismatch(f"{w.size} weights for {D.n} items")
    if np.any(w < 0):
        raise InvalidDistribution("leftover weights must be non-negative")
    k = D.k if k is None else int(k)
    group = group_items(D, w) if group is None else group
    for b in group.blocks:
        if np.ptp(w[list(b)]) > PROB_TOL:
            raise InvalidDistribution(f"weights differ within block {b}")
    reps = canonical_reps(D, group, rep_cap)
    model = build_modrev_lp(reps, w, k, group)
    sol = lp_solve(model, tolerance, method)
    if sol.status is not LPStatus.OPTIMAL:
        raise NumericalFailure(f"ModRevMax LP reported {sol.status.value}")
    n = D.n
    options, seen = [], set()
    for r in range(len(reps)):
        base = r * (n + 1)
        price = max(float(sol.x[base]), 0.0)
        x = _clean(sol.x[base + 1 : base + 1 + n])
        if price <= CLEAN_TOL and not np.any(x > 0):
            continue
        o = MenuOption(np.clip(x, 0.0, 1.0), price if price > CLEAN_TOL else 0.0)
        if o.key() not in seen:
            seen.add(o.key())
            options.append(o)
    comps = (SymmetricComponent(group, tuple(options)),) if options else ()
    return ModRevSolution(
        SymmetricMenu(comps, n), sol.objective, len(reps), group, model.num_vars, model.num_rows, sol.method
    )
