"""Product distributions over item values with k-demand valuations."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterator, NamedTuple, Sequence

import numpy as np

from .errors import (
    InvalidDistribution,
    InvalidK,
    LengthMismatch,
    ModeClassMismatch,
    SupportTooLarge,
)

SUPPORT_CAP = 10**7
PROB_TOL = 1e-12
# samples are drawn in fixed-size chunks so draw i depends only on (seed, i)
SAMPLE_CHUNK = 8192


class TruncationMode(enum.Enum):
    ADDITIVE = "additive"
    MAX = "max"


class Estimate(NamedTuple):
    value: float
    stderr: float


@dataclass(frozen=True, eq=False)
class Marginal:
    """A finite discrete distribution over one item's value.

    Values are strictly ascending and non-negative; every atom has positive
    mass. Use :func:`make_marginal` to build one from raw, unsorted atoms.
    """

    values: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        probs = np.array(self.probs, dtype=np.float64)
        if values.ndim != 1 or values.shape != probs.shape:
            raise LengthMismatch(
                f"values and probs must be 1-D of equal length, got {values.shape} and {probs.shape}"
            )
        if values.size == 0:
            raise InvalidDistribution("marginal has no atoms")
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise InvalidDistribution("values must be finite and non-negative")
        if np.any(np.diff(values) <= 0):
            raise InvalidDistribution("values must be strictly ascending")
        if np.any(probs <= 0) or np.any(probs > 1):
            raise InvalidDistribution("atom probabilities must lie in (0, 1]")
        total = math.fsum(probs.tolist())
        if abs(total - 1.0) > PROB_TOL:
            raise InvalidDistribution(f"probabilities sum to {total!r}, not 1")
        values.setflags(write=False)
        probs.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "probs", probs)

    def __eq__(self, other):
        if not isinstance(other, Marginal):
            return NotImplemented
        return np.array_equal(self.values, other.values) and np.array_equal(self.probs, other.probs)

    __hash__ = None

    @property
    def size(self) -> int:
        return int(self.values.size)

    def mean(self) -> float:
        return float(np.dot(self.values, self.probs))

    def tail(self, x: float) -> float:
        """Pr[v >= x]."""
        return math.fsum(self.probs[self.values >= x].tolist())

    def cdf_below(self, x: float) -> float:
        """Pr[v < x]."""
        return math.fsum(self.probs[self.values < x].tolist())

    def close_to(self, other: "Marginal", tol: float = PROB_TOL) -> bool:
        return (
            self.size == other.size
            and np.allclose(self.values, other.values, rtol=0, atol=tol)
            and np.allclose(self.probs, other.probs, rtol=0, atol=tol)
        )


def make_marginal(values: Sequence[float], probs: Sequence[float]) -> Marginal:
    """Build a marginal, merging duplicate values and dropping zero-mass atoms."""
    values = np.asarray(values, dtype=np.float64)
    probs = np.asarray(probs, dtype=np.float64)
    if values.shape != probs.shape:
        raise LengthMismatch(f"values has {values.size} entries but probs has {probs.size}")
    if np.any(probs < 0):
        raise InvalidDistribution("negative probability")
    merged: dict[float, float] = {}
    for v, p in zip(values.tolist(), probs.tolist()):
        merged[v] = merged.get(v, 0.0) + p
    atoms = sorted((v, p) for v, p in merged.items() if p > 0)
    if not atoms:
        raise InvalidDistribution("marginal has no positive-mass atoms")
    return Marginal(np.array([a[0] for a in atoms]), np.array([a[1] for a in atoms]))


def point_mass(value: float) -> Marginal:
    return Marginal(np.array([float(value)]), np.array([1.0]))


@dataclass(frozen=True, eq=False)
class ProductDistribution:
    """Independent item values, valued by a k-demand buyer.

    ``k == 1`` is unit-demand and ``k == n`` is additive.
    """

    marginals: tuple[Marginal, ...]
    k: int

    def __post_init__(self):
        marginals = tuple(self.marginals)
        if len(marginals) < 1:
            raise InvalidDistribution("need at least one item")
        if not all(isinstance(m, Marginal) for m in marginals):
            raise InvalidDistribution("marginals must be Marginal instances")
        if not isinstance(self.k, (int, np.integer)) or not 1 <= self.k <= len(marginals):
            raise InvalidK(f"k={self.k!r} must be an integer in [1, {len(marginals)}]")
        object.__setattr__(self, "marginals", marginals)
        object.__setattr__(self, "k", int(self.k))

    def __eq__(self, other):
        if not isinstance(other, ProductDistribution):
            return NotImplemented
        return self.k == other.k and self.marginals == other.marginals

    __hash__ = None

    @property
    def n(self) -> int:
        return len(self.marginals)

    @property
    def is_additive(self) -> bool:
        return self.k == self.n

    @property
    def is_unit_demand(self) -> bool:
        return self.k == 1

    def support_size(self) -> int:
        # python ints: no silent wraparound
        return math.prod(m.size for m in self.marginals)

    def max_value(self) -> float:
        return max(float(m.values[-1]) for m in self.marginals)

    def with_marginals(self, marginals: Sequence[Marginal]) -> "ProductDistribution":
        return ProductDistribution(tuple(marginals), self.k)


def make_product(marginals: Sequence[Marginal | tuple], k: int) -> ProductDistribution:
    out = []
    for i, m in enumerate(marginals):
        try:
            if isinstance(m, Marginal):
                out.append(make_marginal(m.values, m.probs))
            else:
                values, probs = m
                out.append(make_marginal(values, probs))
        except (InvalidDistribution, LengthMismatch) as exc:
            raise type(exc)(f"marginal {i}: {exc}") from None
    return ProductDistribution(tuple(out), k)


def iid(marginal: Marginal, n: int, k: int) -> ProductDistribution:
    return ProductDistribution((marginal,) * n, k)


def value_of_set(v: Sequence[float], items: Sequence[int] | None, k: int) -> float:
    """Sum of the ``k`` largest values among ``items`` (all items when None)."""
    v = np.asarray(v, dtype=np.float64)
    sub = v if items is None else v[list(items)]
    if sub.size <= k:
        return float(sub.sum())
    return float(np.sort(sub)[-k:].sum())


def top_k_sum(V: np.ndarray, k: int) -> np.ndarray:
    """Row-wise sum of the k largest entries of a 2-D array."""
    n = V.shape[1]
    if k >= n:
        return V.sum(axis=1)
    if k == 1:
        return V.max(axis=1)
    return np.sort(V, axis=1)[:, n - k :].sum(axis=1)


def truncate(
    D: ProductDistribution,
    T: float,
    p: Sequence[float] | None = None,
    mode: TruncationMode | None = None,
) -> ProductDistribution:
    """Canonical truncation ``D(T, p)``.

    Values above ``T`` are capped at ``T``; independently per item a huge
    value ``W = n^2 max(1, T)^3`` replaces the draw with probability
    ``min(p_i / W, 1)``. Truncation acts on per-item values for every k.
    """
    n = D.n
    if not T > 0:
        raise InvalidDistribution(f"truncation threshold must be positive, got {T!r}")
    p = np.zeros(n) if p is None else np.asarray(p, dtype=np.float64)
    if p.shape != (n,):
        raise LengthMismatch(f"p has {p.size} entries for {n} items")
    if np.any(p < 0):
        raise InvalidDistribution("truncation masses must be non-negative")
    if mode is None:
        mode = TruncationMode.MAX if D.k == 1 else TruncationMode.ADDITIVE
    if mode is TruncationMode.MAX and D.k != 1:
        raise ModeClassMismatch("max truncation requires a unit-demand buyer")
    if mode is TruncationMode.ADDITIVE and D.k == 1 and n > 1:
        raise ModeClassMismatch("additive truncation requires k > 1 (use max truncation for unit-demand)")

    W = n * n * max(1.0, T) ** 3
    out = []
    for m, p_i in zip(D.marginals, p):
        q = min(p_i / W, 1.0)
        if q == 0.0 and m.values[-1] <= T:
            out.append(m)
            continue
        values = np.minimum(m.values, T)
        probs = m.probs * (1.0 - q)
        if q > 0:
            values = np.append(values, W)
            probs = np.append(probs, q)
        merged: dict[float, list[float]] = {}
        for v, pr in zip(values.tolist(), probs.tolist()):
            merged.setdefault(v, []).append(pr)
        atoms = sorted((v, math.fsum(ps)) for v, ps in merged.items())
        atoms = [(v, pr) for v, pr in atoms if pr > 0]
        out.append(Marginal(np.array([a[0] for a in atoms]), np.array([a[1] for a in atoms])))
    return D.with_marginals(out)


def _check_cap(D: ProductDistribution, cap: int) -> int:
    size = D.support_size()
    if size > cap:
        raise SupportTooLarge(f"support has {size} points, cap is {cap}")
    return size


def iter_support(
    D: ProductDistribution, cap: int = SUPPORT_CAP, chunk: int = 1 << 16
) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Yield ``(V, P)`` blocks covering the support in lexicographic atom order."""
    size = _check_cap(D, cap)
    sizes = [m.size for m in D.marginals]
    for start in range(0, size, chunk):
        flat = np.arange(start, min(start + chunk, size))
        idx = np.unravel_index(flat, sizes)
        V = np.empty((flat.size, D.n))
        P = np.ones(flat.size)
        for i, m in enumerate(D.marginals):
            V[:, i] = m.values[idx[i]]
            P *= m.probs[idx[i]]
        yield V, P


def enumerate_support(D: ProductDistribution, cap: int = SUPPORT_CAP) -> tuple[np.ndarray, np.ndarray]:
    """All support points and their product probabilities."""
    blocks = list(iter_support(D, cap))
    return np.concatenate([b[0] for b in blocks]), np.concatenate([b[1] for b in blocks])


def _chunk_rng(seed: int, chunk: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(chunk,)))


def sample_chunk(D: ProductDistribution, seed: int, chunk: int, size: int = SAMPLE_CHUNK) -> np.ndarray:
    """Rows ``chunk*SAMPLE_CHUNK ...`` of the seed's draw sequence."""
    u = _chunk_rng(seed, chunk).random((size, D.n))
    V = np.empty_like(u)
    for i, m in enumerate(D.marginals):
        cdf = np.cumsum(m.probs)
        cdf[-1] = 1.0
        V[:, i] = m.values[np.searchsorted(cdf, u[:, i], side="right").clip(max=m.size - 1)]
    return V


def sample_many(D: ProductDistribution, m: int, seed: int) -> np.ndarray:
    """``m`` i.i.d. value vectors; draw ``i`` depends only on ``(D, seed, i)``."""
    rows = []
    for c in range(-(-m // SAMPLE_CHUNK)):
        rows.append(sample_chunk(D, seed, c, SAMPLE_CHUNK))
    return np.concatenate(rows)[:m] if rows else np.empty((0, D.n))


def sample(D: ProductDistribution, seed: int, index: int = 0) -> np.ndarray:
    c, r = divmod(index, SAMPLE_CHUNK)
    return sample_chunk(D, seed, c, SAMPLE_CHUNK)[r]


def _expected_max(D: ProductDistribution) -> float:
    grid = np.unique(np.concatenate([m.values for m in D.marginals]))
    # E[max] = sum over grid of x * (F(x) - F(x-)) with F the cdf of the max
    F = np.ones_like(grid)
    for m in D.marginals:
        cdf = np.cumsum(m.probs)
        idx = np.searchsorted(m.values, grid, side="right") - 1
        F *= np.where(idx >= 0, cdf[idx.clip(min=0)], 0.0)
    pmf = np.diff(np.concatenate([[0.0], F]))
    return float(np.dot(grid, pmf))


def val_expectation(
    D: ProductDistribution,
    *,
    mode: str = "auto",
    samples: int = 100_000,
    seed: int = 0,
    cap: int = SUPPORT_CAP,
) -> Estimate:
    """Expected value of the grand bundle, ``E[v([n])]``.

    ``mode`` is ``"exact"``, ``"mc"`` or ``"auto"`` (exact when possible).
    """
    if mode not in ("auto", "exact", "mc"):
        raise ValueError(f"unknown mode {mode!r}")
    if mode != "mc":
        if D.is_additive:
            return Estimate(math.fsum(m.mean() for m in D.marginals), 0.0)
        if D.is_unit_demand:
            return Estimate(_expected_max(D), 0.0)
        if mode == "exact" or D.support_size() <= cap:
            total = 0.0
            for V, P in iter_support(D, cap):
                total += float(np.dot(top_k_sum(V, D.k), P))
            return Estimate(total, 0.0)
    vals = top_k_sum(sample_many(D, samples, seed), D.k)
    return Estimate(float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(samples)))
