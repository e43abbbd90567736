"""Bucket mechanisms: selling separately, approximately, with few symmetric options.

Items split into an exclusive set ``B0`` of expensive items with their own
prices, exclusive buckets of medium items sharing one price each (the buyer
takes at most one item per bucket), and a joint bundle of cheap items sold
all-or-nothing. An additive buyer decides each part separately.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .benchmarks import monopoly_price
from .discretize import round_down_power
from .dist import SAMPLE_CHUNK, Estimate, ProductDistribution, iter_support, sample_chunk
from .errors import DegenerateInput, LengthMismatch, MenuTooLarge, UnsupportedClass
from .menu import ItemPermutationGroup, MenuOption, SymmetricComponent, SymmetricMenu

MENU_BUDGET = 1 << 16
# atoms allowed in the exact distribution of the joint bundle's value
CONVOLUTION_CAP = 1_000_000


@dataclass(frozen=True)
class BucketMechanism:
    b0: tuple[tuple[int, float], ...]  # (item, price)
    buckets: tuple[tuple[tuple[int, ...], float], ...]  # (items, common price)
    joint: tuple[tuple[int, ...], float] | None
    dropped: tuple[int, ...]
    eps: float
    n: int
    srev: float  # sum of p_i q_i the mechanism approximates

    @property
    def k(self) -> int:
        return len(self.buckets)

    def items_used(self) -> list[int]:
        out = [i for i, _ in self.b0]
        for items, _ in self.buckets:
            out.extend(items)
        if self.joint:
            out.extend(self.joint[0])
        return out


def bucket_count_bound(q: Sequence[float], eps: float) -> int:
    """Own-bucket items, plus heavy buckets, plus one light bucket per price level."""
    own = sum(1 for x in q if x >= eps / 2)
    return own + math.ceil(2 / eps**3) + math.ceil(math.log(eps**5) / math.log(1 - eps))


def build_buckets(p: Sequence[float], q: Sequence[float], eps: float) -> BucketMechanism:
    """Bucket the items of a selling-separately mechanism with prices ``p``.

    ``q[i]`` is the probability item ``i`` sells at ``p[i]``.
    """
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape:
        raise LengthMismatch(f"{p.size} prices but {q.size} sale probabilities")
    if np.any(p < 0) or np.any(q < 0) or np.any(q > 1):
        raise DegenerateInput("prices must be non-negative and sale probabilities in [0, 1]")
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    S = math.fsum((p * q).tolist())
    if S <= 0:
        raise DegenerateInput("selling separately earns nothing")
    n = p.size
    high = [i for i in range(n) if p[i] >= S / eps**2]
    low = [i for i in range(n) if p[i] <= eps**3 * S]
    medium = [i for i in range(n) if eps**3 * S < p[i] < S / eps**2]

    low_rev = math.fsum(p[i] * q[i] for i in low)
    if low and low_rev >= eps * S:
        joint, dropped = (tuple(low), (1 - eps / 2) * low_rev), ()
    else:
        joint, dropped = None, tuple(low)

    top = S / eps**2
    levels: dict[float, list[int]] = {}
    for i in medium:
        levels.setdefault(round_down_power(p[i], 1 - eps, top), []).append(i)
    buckets = []
    for price in sorted(levels, reverse=True):
        items = levels[price]
        buckets.extend(((i,), price) for i in items if q[i] >= eps / 2)
        rest = sorted((i for i in items if q[i] < eps / 2), key=lambda i: (-q[i], i))
        cur, mass = [], 0.0
        for i in rest:
            if cur and mass + q[i] > eps:
                buckets.append((tuple(cur), price))
                cur, mass = [], 0.0
            cur.append(i)
            mass += q[i]
        if cur:
            buckets.append((tuple(cur), price))
    return BucketMechanism(
        b0=tuple((i, float(p[i])) for i in high),
        buckets=tuple(buckets),
        joint=joint,
        dropped=dropped,
        eps=eps,
        n=n,
        srev=S,
    )


def buckets_from_distribution(D: ProductDistribution, eps: float) -> tuple[BucketMechanism, np.ndarray, np.ndarray]:
    """Bucket the per-item monopoly prices of an additive instance."""
    if not D.is_additive:
        raise UnsupportedClass("bucket mechanisms approximate selling separately to an additive buyer")
    p, q = [], []
    for m in D.marginals:
        price, _ = monopoly_price(m)
        p.append(0.0 if price is None else price)
        q.append(0.0 if price is None else m.tail(price))
    p, q = np.array(p), np.array(q)
    return build_buckets(p, q, eps), p, q


def declared_complexity(bm: BucketMechanism) -> tuple[int, int]:
    """(SSMC, MC) of the menu form, counting the empty purchase."""
    joint = 2 if bm.joint else 1
    ssmc = (len(bm.b0) + 1) * 2**bm.k * joint
    mc = (len(bm.b0) + 1) * math.prod(len(items) + 1 for items, _ in bm.buckets) * joint
    return ssmc, mc


def bucket_group(bm: BucketMechanism) -> ItemPermutationGroup:
    blocks = [items for items, _ in bm.buckets]
    if bm.joint:
        blocks.append(bm.joint[0])
    used = {i for b in blocks for i in b}
    blocks.extend((i,) for i in range(bm.n) if i not in used)
    return ItemPermutationGroup(tuple(blocks))


def bucket_to_menu(bm: BucketMechanism, budget: int = MENU_BUDGET) -> SymmetricMenu:
    """Explicit symmetric menu: one option per (B0 choice, bucket subset, joint flag)."""
    if bm.n * 2 ** (bm.k + 1) > budget:
        raise MenuTooLarge(f"{bm.k} buckets over {bm.n} items exceed the menu budget {budget}")
    group = bucket_group(bm)
    b0_choices = [None] + list(bm.b0)
    joint_choices = [False, True] if bm.joint else [False]
    options = []
    for pick in b0_choices:
        for subset in itertools.product([False, True], repeat=bm.k):
            for with_joint in joint_choices:
                x = np.zeros(bm.n)
                price = 0.0
                if pick is not None:
                    x[pick[0]] = 1.0
                    price += pick[1]
                for take, (items, r) in zip(subset, bm.buckets):
                    if take:
                        x[items[0]] = 1.0
                        price += r
                if with_joint:
                    x[list(bm.joint[0])] = 1.0
                    price += bm.joint[1]
                options.append(MenuOption(x, price))
    return SymmetricMenu((SymmetricComponent(group, tuple(options)),), bm.n)


def _max_at_least(D: ProductDistribution, items: Sequence[int], r: float) -> float:
    return 1.0 - math.prod(D.marginals[i].cdf_below(r) for i in items)


def _sum_at_least(D: ProductDistribution, items: Sequence[int], r: float, cap: int) -> float:
    """Pr[sum of the items' values >= r] by exact convolution."""
    dist = {0.0: 1.0}
    for i in items:
        m = D.marginals[i]
        nxt: dict[float, float] = {}
        for s, ps in dist.items():
            for v, pv in zip(m.values.tolist(), m.probs.tolist()):
                key = s + v
                nxt[key] = nxt.get(key, 0.0) + ps * pv
        if len(nxt) > cap:
            raise MenuTooLarge(f"joint bundle value has more than {cap} atoms")
        dist = nxt
    # values summing to the price up to rounding count as reaching it
    return math.fsum(pr for s, pr in dist.items() if s >= r * (1 - 1e-12))


def _b0_exclusive_exact(D: ProductDistribution, b0) -> float:
    if not b0:
        return 0.0
    items = [i for i, _ in b0]
    prices = np.array([pr for _, pr in b0])
    sub = ProductDistribution(tuple(D.marginals[i] for i in items), len(items))
    total = 0.0
    for V, P in iter_support(sub):
        total += float(_b0_paid(V, prices) @ P)
    return total


def _b0_paid(V: np.ndarray, prices: np.ndarray) -> np.ndarray:
    util = V - prices
    best = util.max(axis=1)
    cand = util >= best[:, None]
    pick = np.where(cand, prices, -np.inf).argmax(axis=1)
    return np.where(best >= 0, prices[pick], 0.0)


def _paid_rows(bm: BucketMechanism, V: np.ndarray, b0_mode: str) -> np.ndarray:
    paid = np.zeros(V.shape[0])
    if bm.b0:
        items = [i for i, _ in bm.b0]
        prices = np.array([pr for _, pr in bm.b0])
        if b0_mode == "independent":
            paid += (V[:, items] >= prices) @ prices
        else:
            paid += _b0_paid(V[:, items], prices)
    for items, r in bm.buckets:
        paid += np.where(V[:, list(items)].max(axis=1) >= r, r, 0.0)
    if bm.joint:
        items, r = bm.joint
        paid += np.where(V[:, list(items)].sum(axis=1) >= r * (1 - 1e-12), r, 0.0)
    return paid


def bucket_revenue(
    bm: BucketMechanism,
    D: ProductDistribution,
    mode: str = "exact",
    samples: int = 100_000,
    seed: int = 0,
    b0_mode: str = "independent",
    cap: int = CONVOLUTION_CAP,
) -> Estimate:
    """Revenue from an additive buyer, part by part.

    ``b0_mode="independent"`` lets the buyer take several ``B0`` items;
    ``"exclusive"`` enforces at most one, as the menu form does.
    """
    if not D.is_additive:
        raise UnsupportedClass("bucket revenue is defined for additive buyers")
    if D.n != bm.n:
        raise LengthMismatch(f"mechanism over {bm.n} items, distribution over {D.n}")
    if b0_mode not in ("independent", "exclusive"):
        raise ValueError(f"unknown b0_mode {b0_mode!r}")
    if mode == "exact":
        parts = []
        if b0_mode == "independent":
            parts.extend(pr * D.marginals[i].tail(pr) for i, pr in bm.b0)
        else:
            parts.append(_b0_exclusive_exact(D, bm.b0))
        parts.extend(r * _max_at_least(D, items, r) for items, r in bm.buckets)
        if bm.joint:
            items, r = bm.joint
            parts.append(r * _sum_at_least(D, items, r, cap))
        return Estimate(math.fsum(parts), 0.0)
    if mode != "mc":
        raise ValueError(f"unknown mode {mode!r}")
    if samples < 2:
        raise ValueError("need at least two samples")
    chunks = []
    for c in range(-(-samples // SAMPLE_CHUNK)):
        size = min(SAMPLE_CHUNK, samples - c * SAMPLE_CHUNK)
        V = sample_chunk(D, seed, c, SAMPLE_CHUNK)[:size]
        chunks.append(_paid_rows(bm, V, b0_mode))
    paid = np.concatenate(chunks)
    return Estimate(float(paid.mean()), float(paid.std(ddof=1) / math.sqrt(samples)))
