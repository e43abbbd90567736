"""Selling menus for a single buyer with independent item values."""

__version__ = "0.1.0"

from .benchmarks import benchmark_report, brev, monopoly_price, srev, srev_star, srev_star_uniform
from .buckets import BucketMechanism, bucket_revenue, bucket_to_menu, build_buckets, buckets_from_distribution
from .discretize import (
    Coupling,
    DiscretizationParams,
    canonical_discretize,
    delta_bound,
    delta_m,
    prob_discretize,
    value_discretize,
)
from .dist import (
    Estimate,
    Marginal,
    ProductDistribution,
    TruncationMode,
    iid,
    make_marginal,
    make_product,
    truncate,
    val_expectation,
)
from .errors import BudgetError, MenuforgeError, NumericalFailure, ValidationError
from .lp import LPBuilder, LPModel, LPSolution, LPStatus, lp_solve
from .menu import (
    ItemPermutationGroup,
    MenuOption,
    SymmetricComponent,
    SymmetricMenu,
    best_symmetric_variant,
    choose,
    complexity_measures,
    concat_exclusive,
    make_exclusive,
    prune_dominated,
    revenue_exact,
    revenue_mc,
    scale_prices,
)
from .oracle import brute_force_optimal
from .reduction import ReductionConfig, run_reduction
from .symmetric_lp import canonical_reps, solve_modrev
from .barrier import check_features, gen_barrier

__all__ = [name for name in dir() if not name.startswith("_")]
