"""Random instance generators shared by the tests."""

from __future__ import annotations

import numpy as np

from menuforge.dist import Marginal, ProductDistribution, make_marginal


def random_marginal(rng: np.random.Generator, support: int, lo: float = 0.0, hi: float = 4.0) -> Marginal:
    values = np.sort(rng.choice(np.arange(int(lo * 4), int(hi * 4) + 1), support, replace=False)) / 4.0
    probs = rng.dirichlet(np.ones(support))
    probs = np.maximum(probs, 0.02)
    probs /= probs.sum()
    return make_marginal(values, probs)


def random_instance(rng: np.random.Generator, n: int, max_support: int, k: int | None = None) -> ProductDistribution:
    marginals = [random_marginal(rng, int(rng.integers(1, max_support + 1))) for _ in range(n)]
    return ProductDistribution(tuple(marginals), n if k is None else k)


def symmetric_instance(rng: np.random.Generator, blocks: list[int], max_support: int, k: int) -> ProductDistribution:
    """Items within each block share one marginal."""
    marginals = []
    for size in blocks:
        m = random_marginal(rng, int(rng.integers(1, max_support + 1)))
        marginals.extend([m] * size)
    return ProductDistribution(tuple(marginals), k)


# acceptance verdicts, printed again in the terminal summary
VERDICTS: list[str] = []


def verdict(number: int, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:2d}: {detail}"
    VERDICTS.append(line)
    print(line)
