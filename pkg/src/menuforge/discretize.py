"""Value and probability discretisation, couplings, and coupling errors.

Every coupling here is a product of per-item kernels: item ``i``'s source
atom ``a`` maps to target atom ``b`` with probability ``kernels[i][a, b]``,
independently across items.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dist import (
    PROB_TOL,
    SUPPORT_CAP,
    Estimate,
    Marginal,
    ProductDistribution,
    iter_support,
    make_marginal,
    sample_many,
    val_expectation,
)
from .errors import BoundednessViolated, InvalidDistribution, LengthMismatch, NonMonotoneCoupling
from .menu import SymmetricMenu

KERNEL_TOL = 1e-9


@dataclass(frozen=True)
class DiscretizationParams:
    """Grid parameters: step ``delta``, top of the value grid ``t * rev_proxy``."""

    delta: float
    t: float
    rev_proxy: float
    k: int
    n: int

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise InvalidDistribution(f"delta must lie in (0, 1), got {self.delta}")
        if not self.rev_proxy > 0 or not self.t > 0:
            raise InvalidDistribution("t and the revenue proxy must be positive")

    @property
    def top(self) -> float:
        return self.t * self.rev_proxy


@dataclass(frozen=True, eq=False)
class Coupling:
    source: ProductDistribution
    target: ProductDistribution
    kernels: tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.kernels) != self.source.n or self.target.n != self.source.n:
            raise LengthMismatch("coupling kernels must cover every item")
        for i, (K, ms, mt) in enumerate(zip(self.kernels, self.source.marginals, self.target.marginals)):
            if K.shape != (ms.size, mt.size):
                raise LengthMismatch(f"item {i}: kernel shape {K.shape} vs supports {ms.size}x{mt.size}")
            if np.any(K < 0) or not np.allclose(K.sum(axis=1), 1.0, rtol=0, atol=KERNEL_TOL):
                raise InvalidDistribution(f"item {i}: kernel rows must be distributions")
            if not np.allclose(ms.probs @ K, mt.probs, rtol=0, atol=KERNEL_TOL):
                raise InvalidDistribution(f"item {i}: kernel does not reproduce the target marginal")

    @classmethod
    def identity(cls, D: ProductDistribution) -> "Coupling":
        return cls(D, D, tuple(np.eye(m.size) for m in D.marginals))

    def compose(self, other: "Coupling") -> "Coupling":
        """First ``self`` then ``other``."""
        return Coupling(self.source, other.target, tuple(a @ b for a, b in zip(self.kernels, other.kernels)))

    def is_dominating(self) -> bool:
        """True when every coupled target value is at most its source value."""
        for K, ms, mt in zip(self.kernels, self.source.marginals, self.target.marginals):
            if np.any((K > 0) & (mt.values[None, :] > ms.values[:, None])):
                return False
        return True

    def forward_gap(self) -> list[np.ndarray]:
        """``v_i - E[v'_i | v_i]`` per source atom."""
        return [ms.values - K @ mt.values for K, ms, mt in zip(self.kernels, self.source.marginals, self.target.marginals)]

    def backward_gap(self) -> list[np.ndarray]:
        """``v'_i - E[v_i | v'_i]`` per target atom."""
        out = []
        for K, ms, mt in zip(self.kernels, self.source.marginals, self.target.marginals):
            joint = ms.probs[:, None] * K
            cond = joint.T @ ms.values / mt.probs
            out.append(mt.values - cond)
        return out


def round_down_power(x: float, base: float, scale: float = 1.0) -> float:
    """Largest ``scale * base**e`` (integer e) not above ``x``; 0 maps to 0."""
    if x <= 0:
        return 0.0
    e = math.floor(math.log(x / scale) / math.log(base))
    # the float log may be off by one either way; settle by direct comparison
    while scale * base**e > x:
        e += 1
    while scale * base ** (e - 1) <= x:
        e -= 1
    return scale * base**e


def value_discretize(D: ProductDistribution, params: DiscretizationParams) -> tuple[ProductDistribution, Coupling]:
    """Round every value down onto the grid ``top * (1-delta)^j``, then zero small values.

    Values whose rounded version falls below ``delta * rev_proxy / k`` become 0.
    """
    top = params.top
    floor = params.delta * params.rev_proxy / params.k
    base = 1.0 - params.delta
    marginals, kernels = [], []
    for i, m in enumerate(D.marginals):
        if m.values[-1] > top * (1 + 1e-12):
            raise BoundednessViolated(f"item {i}: value {m.values[-1]} exceeds the grid top {top}")
        mapped = np.array([min(round_down_power(v, base, top), top) for v in m.values.tolist()])
        mapped[mapped < floor] = 0.0
        tgt = make_marginal(mapped, m.probs)
        K = np.zeros((m.size, tgt.size))
        K[np.arange(m.size), np.searchsorted(tgt.values, mapped)] = 1.0
        marginals.append(tgt)
        kernels.append(K)
    Dp = D.with_marginals(marginals)
    return Dp, Coupling(D, Dp, tuple(kernels))


def prob_discretize(D: ProductDistribution, params: DiscretizationParams) -> tuple[ProductDistribution, Coupling]:
    """Round each positive-value atom's mass down to a power of ``1-delta``.

    Masses below ``delta^2 / n^2`` are zeroed; freed mass moves to value 0.
    The coupling keeps a draw with probability ``q'/q`` and sends it to 0
    otherwise.
    """
    delta, n = params.delta, D.n
    base = 1.0 - delta
    cut = delta * delta / (n * n)
    marginals, kernels = [], []
    for m in D.marginals:
        q = m.probs
        qp = np.array([0.0 if (qq < cut or v == 0) else round_down_power(qq, base) for v, qq in zip(m.values, q)])
        qp = np.minimum(qp, q)
        keep = qp / q
        zero_mass = max(1.0 - math.fsum(qp.tolist()), 0.0)
        vals = np.concatenate([[0.0], m.values])
        probs = np.concatenate([[zero_mass], qp])
        tgt = make_marginal(vals, probs)
        K = np.zeros((m.size, tgt.size))
        z = int(np.searchsorted(tgt.values, 0.0))
        for a, v in enumerate(m.values.tolist()):
            if v == 0:
                K[a, z] = 1.0
                continue
            if keep[a] > 0:
                K[a, np.searchsorted(tgt.values, v)] = keep[a]
            K[a, z] += 1.0 - keep[a]
        marginals.append(tgt)
        kernels.append(K)
    Dp = D.with_marginals(marginals)
    return Dp, Coupling(D, Dp, tuple(kernels))


def canonical_discretize(
    D: ProductDistribution, params: DiscretizationParams
) -> tuple[ProductDistribution, Coupling]:
    """Value-discretise with step ``k * delta``, then probability-discretise with ``delta``."""
    vp = DiscretizationParams(params.k * params.delta, params.t, params.rev_proxy, params.k, params.n)
    D1, c1 = value_discretize(D, vp)
    D2, c2 = prob_discretize(D1, params)
    return D2, c1.compose(c2)


def delta_bound(
    coupling: Coupling,
    mode: str = "exact",
    params: DiscretizationParams | None = None,
    val: float | None = None,
    cap: int = SUPPORT_CAP,
) -> float:
    """Coupling error of a dominating coupling.

    ``exact`` returns ``E[sum of the k largest (v_i - v'_i)]``, the reverse
    term being 0. ``analytic`` returns ``delta * (Val(D) + rev_proxy)``.
    """
    D = coupling.source
    if mode == "analytic":
        if params is None:
            raise ValueError("analytic mode needs discretisation parameters")
        val = val_expectation(D).value if val is None else val
        return params.delta * (val + params.rev_proxy)
    if mode != "exact":
        raise ValueError(f"unknown mode {mode!r}")
    if not coupling.is_dominating():
        raise NonMonotoneCoupling("exact coupling error needs target values never above source values")
    # coordinates of v - v' are independent across items
    diffs = []
    for K, ms, mt in zip(coupling.kernels, D.marginals, coupling.target.marginals):
        joint = ms.probs[:, None] * K
        d = ms.values[:, None] - mt.values[None, :]
        mask = joint > 0
        diffs.append(make_marginal(np.maximum(d[mask], 0.0), joint[mask]))
    return val_expectation(ProductDistribution(tuple(diffs), D.k), mode="exact", cap=cap).value


def _menu_gain(G: np.ndarray, menu: SymmetricMenu) -> np.ndarray:
    """Row-wise ``max(0, max over menu allocations of g @ x)``."""
    best = np.zeros(G.shape[0])
    for c in menu.components:
        if c.options:
            best = np.maximum(best, c.values(G).max(axis=1))
    return best


def _gap_rows(V_idx: np.ndarray, gaps: Sequence[np.ndarray]) -> np.ndarray:
    return np.column_stack([g[V_idx[:, i]] for i, g in enumerate(gaps)])


def _indexed_support(D: ProductDistribution, cap: int):
    """Support blocks as atom indices rather than values."""
    idx_dist = D.with_marginals([Marginal(np.arange(m.size, dtype=np.float64), m.probs) for m in D.marginals])
    for V, P in iter_support(idx_dist, cap):
        yield V.astype(np.intp), P


def delta_m(
    coupling: Coupling,
    menu: SymmetricMenu,
    mode: str = "exact",
    samples: int = 100_000,
    seed: int = 0,
    cap: int = SUPPORT_CAP,
) -> Estimate:
    """Coupling error with respect to ``menu``.

    For product couplings the best mapping is pointwise: given ``v`` pick the
    menu allocation (or nothing) maximising ``(v - E[v'|v]) @ x``. The same
    is done with source and target swapped, and the two are added.
    """
    if menu.n != coupling.source.n:
        raise LengthMismatch("menu and coupling disagree on the number of items")
    terms = []
    for D, gaps in ((coupling.source, coupling.forward_gap()), (coupling.target, coupling.backward_gap())):
        if all(np.all(g <= 0) for g in gaps):
            terms.append(Estimate(0.0, 0.0))
            continue
        if mode == "exact":
            total = 0.0
            for I, P in _indexed_support(D, cap):
                total += float(_menu_gain(_gap_rows(I, gaps), menu) @ P)
            terms.append(Estimate(total, 0.0))
        elif mode == "mc":
            V = sample_many(D, samples, seed)
            I = np.column_stack([np.searchsorted(m.values, V[:, i]) for i, m in enumerate(D.marginals)])
            g = _menu_gain(_gap_rows(I, gaps), menu)
            terms.append(Estimate(float(g.mean()), float(g.std(ddof=1) / math.sqrt(samples))))
        else:
            raise ValueError(f"unknown mode {mode!r}")
    return Estimate(terms[0].value + terms[1].value, math.hypot(terms[0].stderr, terms[1].stderr))


def discretize_weights(w: Sequence[float], delta: float, floor: float) -> np.ndarray:
    """Round weights down to powers of ``1-delta``; weights below ``floor`` become 0."""
    out = np.array([round_down_power(x, 1.0 - delta) for x in np.asarray(w, dtype=np.float64).tolist()])
    out[out < floor] = 0.0
    return out


def check_marginal_sums(D: ProductDistribution, tol: float = PROB_TOL) -> bool:
    return all(abs(math.fsum(m.probs.tolist()) - 1.0) <= tol for m in D.marginals)
