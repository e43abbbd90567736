"""Ground truth for tiny instances: the ModRevMax LP with no symmetry."""

from __future__ import annotations

from typing import Sequence

from .dist import ProductDistribution
from .errors import SupportTooLarge
from .menu import ItemPermutationGroup
from .symmetric_lp import ModRevSolution, solve_modrev

ORACLE_CAP = 2000


def brute_force_optimal(
    D: ProductDistribution,
    w: Sequence[float] | None = None,
    k: int | None = None,
    cap: int = ORACLE_CAP,
    tolerance: float = 1e-9,
    method: str = "auto",
) -> ModRevSolution:
    """Optimal ModRevMax menu using one LP block per support point."""
    size = D.support_size()
    if size > cap:
        raise SupportTooLarge(f"oracle needs the full support ({size} points), cap is {cap}")
    return solve_modrev(
        D, w, k, ItemPermutationGroup.trivial(D.n), rep_cap=cap, tolerance=tolerance, method=method
    )


def optimal_revenue(D: ProductDistribution, cap: int = ORACLE_CAP) -> float:
    return brute_force_optimal(D, cap=cap).objective
