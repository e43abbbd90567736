"""Menus of lotteries, buyer best response, revenue, and menu transforms.

A menu is a list of symmetric components. Each component carries an item
permutation group (a partition of the items into blocks) and a list of
representative options; the component stands for every option obtained by
permuting items within blocks. The null option (nothing, price 0) is always
implicitly available.

Allocations are vectors of per-item probabilities with total at most k, so
a k-demand buyer values allocation ``x`` at ``v @ x``.
"""

from __future__ import annotations

import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np

from .dist import (
    SAMPLE_CHUNK,
    SUPPORT_CAP,
    Estimate,
    ProductDistribution,
    iter_support,
    sample_chunk,
)
from .errors import InvalidDistribution, LengthMismatch

# utilities within TIE_TOL * max(1, max_i v_i) of the best count as ties
TIE_TOL = 1e-9
OVERFLOW_LIMIT = 2**63
_CHUNK = 4096


@dataclass(frozen=True)
class ItemPermutationGroup:
    """Permutations that separately permute items inside each block."""

    blocks: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        blocks = tuple(sorted(tuple(sorted(int(i) for i in b)) for b in self.blocks))
        items = [i for b in blocks for i in b]
        if any(len(b) == 0 for b in blocks):
            raise InvalidDistribution("empty block in item partition")
        if sorted(items) != list(range(len(items))):
            raise InvalidDistribution(f"blocks {blocks} do not partition range({len(items)})")
        object.__setattr__(self, "blocks", blocks)

    @classmethod
    def trivial(cls, n: int) -> "ItemPermutationGroup":
        return cls(tuple((i,) for i in range(n)))

    @classmethod
    def full(cls, n: int) -> "ItemPermutationGroup":
        return cls((tuple(range(n)),))

    @property
    def n(self) -> int:
        return sum(len(b) for b in self.blocks)

    @property
    def is_trivial(self) -> bool:
        return all(len(b) == 1 for b in self.blocks)

    @cached_property
    def block_of(self) -> np.ndarray:
        out = np.empty(self.n, dtype=np.intp)
        for j, b in enumerate(self.blocks):
            out[list(b)] = j
        return out

    @cached_property
    def singletons(self) -> np.ndarray:
        return np.array([b[0] for b in self.blocks if len(b) == 1], dtype=np.intp)

    @cached_property
    def wide_blocks(self) -> tuple[np.ndarray, ...]:
        return tuple(np.array(b, dtype=np.intp) for b in self.blocks if len(b) > 1)


@dataclass(frozen=True, eq=False)
class MenuOption:
    alloc: np.ndarray
    price: float

    def __post_init__(self):
        x = np.array(self.alloc, dtype=np.float64)
        if x.ndim != 1:
            raise LengthMismatch("allocation must be a vector")
        if np.any(x < 0) or np.any(x > 1) or not np.all(np.isfinite(x)):
            raise InvalidDistribution(f"allocation probabilities must lie in [0, 1]: {x}")
        price = float(self.price)
        if not math.isfinite(price) or price < 0:
            raise InvalidDistribution(f"price must be finite and non-negative, got {price}")
        x.setflags(write=False)
        object.__setattr__(self, "alloc", x)
        object.__setattr__(self, "price", price)

    def __eq__(self, other):
        if not isinstance(other, MenuOption):
            return NotImplemented
        return self.price == other.price and np.array_equal(self.alloc, other.alloc)

    __hash__ = None

    def key(self) -> tuple:
        return (tuple(self.alloc.tolist()), self.price)


@dataclass(frozen=True, eq=False)
class SymmetricComponent:
    group: ItemPermutationGroup
    options: tuple[MenuOption, ...]

    def __post_init__(self):
        object.__setattr__(self, "options", tuple(self.options))
        for o in self.options:
            if o.alloc.size != self.group.n:
                raise LengthMismatch(f"option has {o.alloc.size} items, group has {self.group.n}")

    def __eq__(self, other):
        if not isinstance(other, SymmetricComponent):
            return NotImplemented
        return self.group == other.group and self.options == other.options

    __hash__ = None

    @cached_property
    def X(self) -> np.ndarray:
        if not self.options:
            return np.zeros((0, self.group.n))
        return np.vstack([o.alloc for o in self.options])

    @cached_property
    def prices(self) -> np.ndarray:
        return np.array([o.price for o in self.options], dtype=np.float64)

    @cached_property
    def _sorted_blocks(self) -> tuple[np.ndarray, ...]:
        # allocation entries sorted descending within each wide block
        return tuple(-np.sort(-self.X[:, b], axis=1) for b in self.group.wide_blocks)

    def values(self, V: np.ndarray) -> np.ndarray:
        """Best-permutation value ``max_sigma v @ sigma(x)`` for every row and option."""
        out = np.zeros((V.shape[0], len(self.options)))
        if not self.options:
            return out
        s = self.group.singletons
        if s.size:
            out += V[:, s] @ self.X[:, s].T
        for b, Xb in zip(self.group.wide_blocks, self._sorted_blocks):
            out += -np.sort(-V[:, b], axis=1) @ Xb.T
        return out


@dataclass(frozen=True, eq=False)
class SymmetricMenu:
    components: tuple[SymmetricComponent, ...]
    n: int

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        for c in self.components:
            if c.group.n != self.n:
                raise LengthMismatch(f"component over {c.group.n} items in a menu over {self.n}")

    def __eq__(self, other):
        if not isinstance(other, SymmetricMenu):
            return NotImplemented
        return self.n == other.n and self.components == other.components

    __hash__ = None

    @classmethod
    def empty(cls, n: int) -> "SymmetricMenu":
        return cls((), n)

    @classmethod
    def from_options(
        cls, options: Sequence[MenuOption | tuple], n: int, group: ItemPermutationGroup | None = None
    ) -> "SymmetricMenu":
        opts = tuple(o if isinstance(o, MenuOption) else MenuOption(*o) for o in options)
        group = group or ItemPermutationGroup.trivial(n)
        return cls((SymmetricComponent(group, opts),) if opts else (), n)

    def iter_options(self):
        for ci, c in enumerate(self.components):
            for oi, o in enumerate(c.options):
                yield ci, oi, c.group, o

    @property
    def num_options(self) -> int:
        return sum(len(c.options) for c in self.components)

    def max_price(self) -> float:
        return max((o.price for _, _, _, o in self.iter_options()), default=0.0)


class BuyerChoice(NamedTuple):
    component: int  # -1 for the null option
    option: int
    alloc: np.ndarray
    price: float
    utility: float


class Complexity(NamedTuple):
    """Menu complexity; ``None`` marks overflow (or, for SSMC, mixed groups)."""

    mc: int | None
    ssmc: int | None
    wsmc: int


def option_utility(v: Sequence[float], alloc: Sequence[float], price: float) -> float:
    v = np.asarray(v, dtype=np.float64)
    alloc = np.asarray(alloc, dtype=np.float64)
    if v.shape != alloc.shape:
        raise LengthMismatch(f"value vector {v.shape} vs allocation {alloc.shape}")
    return float(v @ alloc) - float(price)


def best_symmetric_variant(
    v: Sequence[float], group: ItemPermutationGroup, alloc: Sequence[float], price: float
) -> tuple[np.ndarray, float]:
    """Permute ``alloc`` within blocks to match the ordering of ``v``.

    Within a block the largest allocation entry goes to the highest-value
    item; equal values keep item order. Returns the concrete allocation and
    its utility, which is the maximum over the whole orbit.
    """
    v = np.asarray(v, dtype=np.float64)
    x = np.asarray(alloc, dtype=np.float64)
    out = x.copy()
    for b in group.blocks:
        if len(b) == 1:
            continue
        b = np.array(b)
        order = b[np.argsort(-v[b], kind="stable")]
        out[order] = -np.sort(-x[b])
    return out, float(v @ out) - float(price)


def _tolerance(V: np.ndarray, tie_tol: float) -> np.ndarray:
    top = V.max(axis=1) if V.shape[1] else np.zeros(V.shape[0])
    return tie_tol * np.maximum(1.0, top)


def _gather(menu: SymmetricMenu) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    prices, comp, opt = [], [], []
    for ci, c in enumerate(menu.components):
        prices.append(c.prices)
        comp.append(np.full(len(c.options), ci))
        opt.append(np.arange(len(c.options)))
    if not prices:
        z = np.zeros(0)
        return z, z.astype(int), z.astype(int)
    return np.concatenate(prices), np.concatenate(comp), np.concatenate(opt)


def _choose_rows(V: np.ndarray, menu: SymmetricMenu, tie_tol: float):
    """Vectorised buyer choice; returns (global option index or -1, price, utility)."""
    prices, _, _ = _gather(menu)
    N = V.shape[0]
    if prices.size == 0:
        return np.full(N, -1), np.zeros(N), np.zeros(N)
    vals = np.hstack([c.values(V) for c in menu.components])
    net = vals - prices
    best = np.maximum(net.max(axis=1), 0.0)
    cand = net >= (best - _tolerance(V, tie_tol))[:, None]
    score = np.where(cand, prices, -np.inf)
    pick = score.argmax(axis=1)
    bought = cand[np.arange(N), pick]
    idx = np.where(bought, pick, -1)
    paid = np.where(bought, prices[pick], 0.0)
    util = np.where(bought, net[np.arange(N), pick], 0.0)
    return idx, paid, util


def choose_many(V: np.ndarray, menu: SymmetricMenu, tie_tol: float = TIE_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Paid price and utility for each row of ``V``."""
    V = np.atleast_2d(np.asarray(V, dtype=np.float64))
    paid = np.empty(V.shape[0])
    util = np.empty(V.shape[0])
    for s in range(0, V.shape[0], _CHUNK):
        _, paid[s : s + _CHUNK], util[s : s + _CHUNK] = _choose_rows(V[s : s + _CHUNK], menu, tie_tol)
    return paid, util


def choose(v: Sequence[float], menu: SymmetricMenu, tie_tol: float = TIE_TOL) -> BuyerChoice:
    """Utility-maximising option, ties to higher price then lower indices.

    The null option (utility 0, price 0) is always available; a zero-utility
    option is bought in preference to walking away.
    """
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (menu.n,):
        raise LengthMismatch(f"value vector has {v.size} entries for {menu.n} items")
    idx, paid, util = _choose_rows(v[None, :], menu, tie_tol)
    if idx[0] < 0:
        return BuyerChoice(-1, -1, np.zeros(menu.n), 0.0, 0.0)
    _, comp, opt = _gather(menu)
    ci, oi = int(comp[idx[0]]), int(opt[idx[0]])
    c = menu.components[ci]
    o = c.options[oi]
    x, u = best_symmetric_variant(v, c.group, o.alloc, o.price)
    return BuyerChoice(ci, oi, x, o.price, u)


def revenue_exact(
    menu: SymmetricMenu, D: ProductDistribution, cap: int = SUPPORT_CAP, tie_tol: float = TIE_TOL
) -> float:
    """Expected payment, enumerating the whole support."""
    if menu.n != D.n:
        raise LengthMismatch(f"menu over {menu.n} items, distribution over {D.n}")
    parts = []
    for V, P in iter_support(D, cap):
        paid, _ = choose_many(V, menu, tie_tol)
        parts.append(paid * P)
    return math.fsum(np.concatenate(parts).tolist())


def revenue_mc(
    menu: SymmetricMenu,
    D: ProductDistribution,
    m: int,
    seed: int,
    workers: int = 1,
    tie_tol: float = TIE_TOL,
) -> Estimate:
    """Monte Carlo revenue estimate with standard error.

    Samples come in fixed chunks keyed by ``(seed, chunk)``, so the result is
    identical for any worker count.
    """
    if m < 2:
        raise ValueError("need at least two samples")
    chunks = -(-m // SAMPLE_CHUNK)

    def run(c: int) -> np.ndarray:
        size = min(SAMPLE_CHUNK, m - c * SAMPLE_CHUNK)
        V = sample_chunk(D, seed, c, SAMPLE_CHUNK)[:size]
        return choose_many(V, menu, tie_tol)[0]

    if workers > 1 and chunks > 1:
        with ThreadPoolExecutor(workers) as pool:
            paid = np.concatenate(list(pool.map(run, range(chunks))))
    else:
        paid = np.concatenate([run(c) for c in range(chunks)])
    return Estimate(float(paid.mean()), float(paid.std(ddof=1) / math.sqrt(m)))


def leftovers(menu: SymmetricMenu) -> np.ndarray:
    """Per item, one minus the largest probability any option awards it."""
    top = np.zeros(menu.n)
    for c in menu.components:
        if not c.options:
            continue
        col_max = c.X.max(axis=0)
        for b in c.group.blocks:
            b = list(b)
            top[b] = np.maximum(top[b], col_max[b].max())
    return 1.0 - top


def modrev_objective(menu: SymmetricMenu, D: ProductDistribution, w: Sequence[float], **kw) -> float:
    w = np.asarray(w, dtype=np.float64)
    return revenue_exact(menu, D, **kw) + float(w @ leftovers(menu))


def _map_prices(menu: SymmetricMenu, fn) -> SymmetricMenu:
    comps = [
        SymmetricComponent(c.group, tuple(MenuOption(o.alloc, fn(o.price)) for o in c.options))
        for c in menu.components
    ]
    return SymmetricMenu(tuple(comps), menu.n)


def scale_prices(menu: SymmetricMenu, factor: float) -> SymmetricMenu:
    if not 0 < factor <= 1:
        raise ValueError(f"scale factor must lie in (0, 1], got {factor}")
    if factor == 1:
        return menu
    return _map_prices(menu, lambda p: p * factor)


def _split_single_items(x: np.ndarray, group: ItemPermutationGroup) -> list[np.ndarray]:
    """Single-item lotteries covering every ``X_i(sigma(x))`` up to the group.

    One representative per distinct positive entry per block suffices: the
    component's orbit supplies the rest.
    """
    out = []
    for b in group.blocks:
        seen = set()
        for i in b:
            if x[i] > 0 and x[i] not in seen:
                seen.add(x[i])
                e = np.zeros_like(x)
                e[i] = x[i]
                out.append(e)
    return out


def make_exclusive(menu: SymmetricMenu, E: float, eps: float) -> SymmetricMenu:
    """Replace every option priced above ``E`` by single-item lotteries.

    Cheap options keep their allocation; every price is multiplied by
    ``1 - eps``. Components mixing cheap and expensive options are split
    into a cheap and an expensive component sharing the group.
    """
    if not E > 0:
        raise ValueError("E must be positive")
    f = 1.0 - eps
    comps = []
    for c in menu.components:
        cheap = [MenuOption(o.alloc, f * o.price) for o in c.options if o.price <= E]
        pricey = []
        for o in c.options:
            if o.price > E:
                pricey.extend(MenuOption(e, f * o.price) for e in _split_single_items(o.alloc, c.group))
        if cheap:
            comps.append(SymmetricComponent(c.group, tuple(cheap)))
        if pricey:
            comps.append(SymmetricComponent(c.group, tuple(pricey)))
    return SymmetricMenu(tuple(comps), menu.n)


def concat_exclusive(
    menu: SymmetricMenu, T: float, r: Sequence[float | None], eps: float, tie_tol: float = TIE_TOL
) -> SymmetricMenu:
    """Append one deterministic single-item option per item with a reserve.

    For item ``i`` the buyer valuing only item ``i`` at ``T`` picks
    ``(x, q)`` from ``menu``; the appended option sells item ``i`` for
    ``q + r_i (1 - x_i)``. Then all prices are multiplied by ``1 - eps``.
    Items whose reserve is ``None`` get no option.
    """
    if len(r) != menu.n:
        raise LengthMismatch(f"{len(r)} reserves for {menu.n} items")
    extra = []
    for i, r_i in enumerate(r):
        if r_i is None:
            continue
        v = np.zeros(menu.n)
        v[i] = T
        pick = choose(v, menu, tie_tol)
        e = np.zeros(menu.n)
        e[i] = 1.0
        extra.append(MenuOption(e, pick.price + float(r_i) * (1.0 - pick.alloc[i])))
    comps = list(menu.components)
    if extra:
        comps.append(SymmetricComponent(ItemPermutationGroup.trivial(menu.n), tuple(extra)))
    return scale_prices(SymmetricMenu(tuple(comps), menu.n), 1.0 - eps)


def _dominates(prob_s: float, price_s: float, prob_t: float, price_t: float) -> bool:
    # per-unit price compared by cross-multiplication: no division by zero
    return prob_s >= prob_t and price_s * prob_t <= price_t * prob_s


def prune_dominated(menu: SymmetricMenu) -> SymmetricMenu:
    """Drop single-item lotteries that are dominated on every item of their orbit.

    ``(S, p)`` dominates ``(T, q)`` on item ``i`` when it awards ``i`` at
    least as often at no higher price per unit of probability. Identical
    lotteries dominate only later copies, so one of them always survives.
    Options awarding several items, or none, are never touched.
    """
    lotteries: list[tuple[int, int, float, float, tuple]] = []  # (comp, opt, prob, price, orbit)
    for ci, oi, g, o in menu.iter_options():
        pos = np.flatnonzero(o.alloc > 0)
        if pos.size != 1:
            continue
        j = int(pos[0])
        orbit = g.blocks[g.block_of[j]]
        lotteries.append((ci, oi, float(o.alloc[j]), o.price, orbit))

    by_item: dict[int, list[int]] = {}
    for idx, (_, _, _, _, orbit) in enumerate(lotteries):
        for i in orbit:
            by_item.setdefault(i, []).append(idx)

    removed = set()
    for t, (ct, ot, pt, qt, orbit) in enumerate(lotteries):
        covered = True
        for i in orbit:
            hit = False
            for s in by_item[i]:
                if s == t:
                    continue
                cs, os_, ps, qs, _ = lotteries[s]
                if not _dominates(ps, qs, pt, qt):
                    continue
                if _dominates(pt, qt, ps, qs) and (cs, os_) > (ct, ot):
                    continue
                hit = True
                break
            if not hit:
                covered = False
                break
        if covered:
            removed.add((ct, ot))

    comps = []
    for ci, c in enumerate(menu.components):
        keep = tuple(o for oi, o in enumerate(c.options) if (ci, oi) not in removed)
        if keep:
            comps.append(SymmetricComponent(c.group, keep))
    return SymmetricMenu(tuple(comps), menu.n)


def orbit_size(x: Sequence[float], group: ItemPermutationGroup) -> int:
    """Number of distinct allocations obtained by permuting within blocks."""
    x = np.asarray(x)
    total = 1
    for b in group.blocks:
        counts = Counter(x[list(b)].tolist())
        total *= math.factorial(len(b)) // math.prod(math.factorial(c) for c in counts.values())
    return total


def complexity_measures(menu: SymmetricMenu) -> Complexity:
    """Declared complexities of the representation.

    MC sums orbit sizes per component; SSMC equals the option count when all
    components share one group (``None`` otherwise); WSMC is the option count.
    """
    mc = 0
    for _, _, g, o in menu.iter_options():
        mc += orbit_size(o.alloc, g)
    wsmc = menu.num_options
    groups = {c.group for c in menu.components}
    ssmc = wsmc if len(groups) <= 1 else None
    return Complexity(mc if mc < OVERFLOW_LIMIT else None, ssmc, wsmc)


def expand_orbits(menu: SymmetricMenu, limit: int = 100_000) -> SymmetricMenu:
    """Equivalent menu with the trivial group, listing every orbit element."""
    from itertools import permutations, product

    opts = []
    for _, _, g, o in menu.iter_options():
        per_block = []
        for b in g.blocks:
            entries = o.alloc[list(b)]
            per_block.append(sorted(set(permutations(entries.tolist()))))
        for combo in product(*per_block):
            x = np.empty(menu.n)
            for b, vals in zip(g.blocks, combo):
                x[list(b)] = vals
            opts.append(MenuOption(x, o.price))
            if len(opts) > limit:
                raise ValueError("orbit expansion exceeds limit")
    return SymmetricMenu.from_options(opts, menu.n)
