"""Command-line entry point.

Every subcommand prints a report (JSON or plain text) to stdout, or to
``--report PATH``. ``-o`` names the subcommand's main artefact: a menu for
``solve``/``oracle``/``reduce``, an instance for ``barrier``/``discretize``,
a mechanism for ``bucketize`` and the report itself for ``bench``, ``eval``
and ``complexity``.

Exit codes: 0 on success, 2 on invalid input, 3 when a size budget is
exhausted, 1 for any other library failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from . import __version__
from .barrier import check_features, gen_barrier
from .benchmarks import benchmark_report, brev, srev_star_uniform
from .buckets import (
    MENU_BUDGET,
    bucket_count_bound,
    bucket_revenue,
    build_buckets,
    buckets_from_distribution,
    declared_complexity,
)
from .discretize import DiscretizationParams, canonical_discretize, delta_bound
from .dist import SUPPORT_CAP, ProductDistribution
from .errors import BudgetError, MenuforgeError, ValidationError
from .menu import complexity_measures, revenue_exact, revenue_mc
from .oracle import ORACLE_CAP, brute_force_optimal
from .reduction import ReductionConfig, run_reduction, structure_check
from .serialize import (
    buckets_to_dict,
    dumps,
    instance_from_dict,
    instance_to_dict,
    menu_from_dict,
    menu_to_dict,
    read_json,
    write_json,
)
from .symmetric_lp import REP_CAP, solve_modrev

log = logging.getLogger("menuforge")

LOG_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "info": logging.INFO, "debug": logging.DEBUG}


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    epsilon: float
    seed: int
    samples: int
    tolerance: float
    support_cap: int
    rep_cap: int
    threads: int
    input: str | None
    output: str | None
    report: str | None
    format: str

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise ValidationError(f"--epsilon must lie in (0, 1), got {self.epsilon}")
        if self.samples < 2:
            raise ValidationError(f"--samples must be at least 2, got {self.samples}")
        if self.support_cap <= 0 or self.rep_cap <= 0:
            raise ValidationError("--support-cap and --rep-cap must be positive")
        if self.threads <= 0:
            raise ValidationError("--threads must be positive")
        if self.tolerance <= 0:
            raise ValidationError("--tolerance must be positive")


def _config(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        subcommand=args.command,
        epsilon=args.epsilon,
        seed=args.seed,
        samples=args.samples,
        tolerance=args.tolerance,
        support_cap=args.support_cap,
        rep_cap=args.rep_cap,
        threads=args.threads,
        input=args.input,
        output=args.output,
        report=args.report,
        format=args.format,
    )


def _load_instance(path: str | None) -> ProductDistribution:
    if not path:
        raise ValidationError("this subcommand needs an instance file (-i)")
    return instance_from_dict(read_json(path))


def _load_weights(path: str | None, n: int) -> np.ndarray | None:
    if not path:
        return None
    raw = read_json(path)
    if isinstance(raw, dict):
        raw = raw.get("w")
    if not isinstance(raw, list):
        raise ValidationError('weights file must be a list or an object with "w"')
    return np.array(raw, dtype=float)


def _provenance(cfg: RunConfig, **ledger: Any) -> dict:
    return {
        "tool": "menuforge",
        "version": __version__,
        "subcommand": cfg.subcommand,
        "seed": cfg.seed,
        "epsilon": cfg.epsilon,
        "samples": cfg.samples,
        "tolerance": cfg.tolerance,
        "parameters": ledger,
    }


def _complexity(c) -> dict:
    return {"mc": c.mc, "ssmc": c.ssmc, "wsmc": c.wsmc}


# subcommands


def cmd_solve(args, cfg: RunConfig, trivial: bool = False) -> tuple[dict, Any]:
    D = _load_instance(cfg.input)
    w = _load_weights(args.weights, D.n)
    if trivial:
        sol = brute_force_optimal(D, w, cap=min(cfg.support_cap, args.oracle_cap), tolerance=cfg.tolerance)
    else:
        sol = solve_modrev(D, w, rep_cap=cfg.rep_cap, tolerance=cfg.tolerance)
    report = {
        "objective": sol.objective,
        "num_reps": sol.num_reps,
        "raw_support": D.support_size(),
        "blocks": [list(b) for b in sol.group.blocks],
        "lp_vars": sol.lp_vars,
        "lp_rows": sol.lp_rows,
        "lp_method": sol.method,
        "complexity": _complexity(complexity_measures(sol.menu)),
        "provenance": _provenance(cfg),
    }
    return report, menu_to_dict(sol.menu)


def cmd_oracle(args, cfg):
    return cmd_solve(args, cfg, trivial=True)


def cmd_reduce(args, cfg: RunConfig):
    D = _load_instance(cfg.input)
    rc = ReductionConfig(
        safety=args.safety_factor,
        brev_samples=cfg.samples,
        seed=cfg.seed,
        rep_cap=cfg.rep_cap,
        support_cap=cfg.support_cap,
        eval_samples=cfg.samples,
        with_oracle=not args.no_oracle,
        tolerance=cfg.tolerance,
        threads=cfg.threads,
    )
    rep = run_reduction(D, cfg.epsilon, rc)
    p = rep.params
    report = {
        "revenue": rep.revenue.value,
        "revenue_stderr": rep.revenue.stderr,
        "revenue_exact": rep.revenue_exact,
        "oracle_revenue": rep.oracle_revenue,
        "ratio": rep.ratio,
        "bounded_objective": rep.bounded_objective,
        "shortcut": rep.shortcut,
        "num_reps": rep.num_reps,
        "complexity_bounded": _complexity(rep.complexity_bounded),
        "complexity_final": _complexity(rep.complexity_final),
        "structure": structure_check(rep),
        "provenance": _provenance(
            cfg,
            H=p.H,
            E=p.E,
            T=p.T,
            delta=rep.delta,
            t=rep.t,
            rev_proxy=p.rev_proxy,
            srev_star_lower=p.srev_star_lower,
            brev=p.brev,
            safety=p.safety,
            w=list(p.w),
            tail_prices=[None if r is None else r for r in p.r],
        ),
    }
    return report, menu_to_dict(rep.final_menu)


def cmd_bench(args, cfg: RunConfig):
    D = _load_instance(cfg.input)
    b = benchmark_report(D, cfg.samples, cfg.seed, cfg.support_cap)
    report = {
        "srev": None if b.srev is None else {"prices": list(b.srev.prices), "revenue": b.srev.revenue},
        "brev": {"price": b.brev.price, "revenue": b.brev.revenue, "stderr": b.brev.stderr},
        "srev_star_lower": {"price": b.srev_star_lower.price, "revenue": b.srev_star_lower.revenue},
        "srev_star_exact": None
        if b.srev_star_exact is None
        else {"prices": list(b.srev_star_exact.prices), "revenue": b.srev_star_exact.revenue},
        "monopoly": [{"price": m.price, "revenue": m.revenue} for m in b.per_item_monopoly],
        "provenance": _provenance(cfg),
    }
    return report, report


def cmd_bucketize(args, cfg: RunConfig):
    D = _load_instance(cfg.input)
    eps = cfg.epsilon
    if args.prices and not args.from_srev:
        raw = read_json(args.prices)
        p = np.array(raw["prices"] if isinstance(raw, dict) else raw, dtype=float)
        if p.size != D.n:
            raise ValidationError(f"{p.size} prices for {D.n} items")
        q = np.array([m.tail(x) for m, x in zip(D.marginals, p)])
        bm = build_buckets(p, q, eps)
    else:
        bm, p, q = buckets_from_distribution(D, eps)
    ssmc, mc = declared_complexity(bm)
    if D.support_size() <= cfg.support_cap:
        rev = bucket_revenue(bm, D, "exact")
    else:
        rev = bucket_revenue(bm, D, "mc", cfg.samples, cfg.seed)
    report = {
        "buckets": bm.k,
        "bucket_bound": bucket_count_bound(q, eps),
        "b0_items": len(bm.b0),
        "joint_items": 0 if bm.joint is None else len(bm.joint[0]),
        "dropped_items": len(bm.dropped),
        "srev": bm.srev,
        "revenue": rev.value,
        "revenue_stderr": rev.stderr,
        "declared_ssmc": ssmc,
        "declared_mc": mc,
        "ssmc_bound": bm.n * 2 ** (bm.k + 1),
        "menu_budget": MENU_BUDGET,
        "provenance": _provenance(cfg),
    }
    return report, buckets_to_dict(bm)


def cmd_eval(args, cfg: RunConfig):
    D = _load_instance(cfg.input)
    if not args.menu:
        raise ValidationError("eval needs a menu file (--menu)")
    M = menu_from_dict(read_json(args.menu))
    if D.support_size() <= cfg.support_cap and not args.mc:
        value, stderr, exact = revenue_exact(M, D, cfg.support_cap), 0.0, True
    else:
        est = revenue_mc(M, D, cfg.samples, cfg.seed, cfg.threads)
        value, stderr, exact = est.value, est.stderr, False
    report = {"revenue": value, "stderr": stderr, "exact": exact, "provenance": _provenance(cfg)}
    return report, report


def cmd_discretize(args, cfg: RunConfig):
    D = _load_instance(cfg.input)
    rev = args.rev_proxy
    if rev is None:
        rev = max(srev_star_uniform(D).revenue, brev(D, cfg.samples, cfg.seed, cfg.support_cap).revenue)
    if not rev > 0:
        raise ValidationError("revenue proxy must be positive")
    delta = args.delta if args.delta is not None else cfg.epsilon**2 / (max(1.0, D.max_value() / rev) * D.k)
    t = args.t if args.t is not None else D.max_value() / rev
    params = DiscretizationParams(delta, t, rev, D.k, D.n)
    Dd, coupling = canonical_discretize(D, params)
    analytic = delta_bound(coupling, "analytic", params)
    try:
        exact = delta_bound(coupling, "exact", cap=cfg.support_cap)
    except BudgetError:
        exact = None
    report = {
        "support_before": D.support_size(),
        "support_after": Dd.support_size(),
        "delta_exact": exact,
        "delta_analytic": analytic,
        "provenance": _provenance(cfg, delta=delta, t=t, rev_proxy=rev, top=params.top),
    }
    return report, instance_to_dict(Dd)


def cmd_barrier(args, cfg: RunConfig):
    D, spec = gen_barrier(args.n, cfg.epsilon, cfg.seed, k=args.k_override, separation=args.separation)
    f = check_features(D, spec, brev_samples=args.brev_samples, seed=cfg.seed)
    report = {
        "n": spec.n,
        "k": spec.k,
        "separation": spec.separation,
        "features": {name: getattr(f, name) for name in f.__dataclass_fields__},
        "provenance": _provenance(cfg),
    }
    return report, instance_to_dict(D)


def cmd_complexity(args, cfg: RunConfig):
    path = args.menu or cfg.input
    if not path:
        raise ValidationError("complexity needs a menu file (--menu or -i)")
    M = menu_from_dict(read_json(path))
    c = complexity_measures(M)
    report = {"options": M.num_options, **_complexity(c), "components": len(M.components)}
    return report, report


COMMANDS: dict[str, Callable] = {
    "solve": cmd_solve,
    "oracle": cmd_oracle,
    "reduce": cmd_reduce,
    "bench": cmd_bench,
    "bucketize": cmd_bucketize,
    "eval": cmd_eval,
    "discretize": cmd_discretize,
    "barrier": cmd_barrier,
    "complexity": cmd_complexity,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-i", "--input", help="input JSON file")
    common.add_argument("-o", "--output", help="main output file")
    common.add_argument("--report", help="write the report here instead of stdout")
    common.add_argument("--epsilon", type=float, default=0.1)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--samples", type=int, default=100_000)
    common.add_argument("--tolerance", type=float, default=1e-9)
    common.add_argument("--support-cap", type=int, default=SUPPORT_CAP)
    common.add_argument("--rep-cap", type=int, default=REP_CAP)
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    common.add_argument("--format", choices=("json", "text"), default="json")

    parser = argparse.ArgumentParser(prog="menuforge", description="Revenue-optimal menus for product distributions.")
    parser.add_argument("--version", action="version", version=f"menuforge {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    for name in ("solve", "oracle"):
        p = sub.add_parser(name, parents=[common], help=f"{name}: optimal menu via the LP")
        p.add_argument("--weights", help="JSON list of leftover weights")
        p.add_argument("--oracle-cap", type=int, default=ORACLE_CAP)
    p = sub.add_parser("reduce", parents=[common], help="run the truncate/solve/re-attach pipeline")
    p.add_argument("--safety-factor", type=float, default=2.0)
    p.add_argument("--no-oracle", action="store_true", help="skip the brute-force comparison")
    sub.add_parser("bench", parents=[common], help="posted-price and bundle benchmarks")
    p = sub.add_parser("bucketize", parents=[common], help="bucket mechanism for selling separately")
    p.add_argument("--prices", help="JSON list of item prices")
    p.add_argument("--from-srev", action="store_true", help="use per-item monopoly prices (default)")
    p = sub.add_parser("eval", parents=[common], help="revenue of a menu")
    p.add_argument("--menu", help="menu JSON file")
    p.add_argument("--mc", action="store_true", help="force Monte Carlo")
    p = sub.add_parser("discretize", parents=[common], help="canonical discretisation of an instance")
    p.add_argument("--delta", type=float)
    p.add_argument("--t", type=float)
    p.add_argument("--rev-proxy", type=float)
    p = sub.add_parser("barrier", parents=[common], help="generate the hard additive instance")
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--k-override", type=int)
    p.add_argument("--separation", choices=("hamming", "one_sided"), default="hamming")
    p.add_argument("--brev-samples", type=int, default=20_000)
    p = sub.add_parser("complexity", parents=[common], help="menu complexity measures")
    p.add_argument("--menu", help="menu JSON file (or -i)")
    return parser


def _text(obj: Any, prefix: str = "") -> list[str]:
    if isinstance(obj, dict):
        lines = []
        for k, v in obj.items():
            lines.extend(_text(v, f"{prefix}{k}." if isinstance(v, dict) else f"{prefix}{k}"))
        return lines
    return [f"{prefix.rstrip('.')}: {dumps(obj)}"]


def _emit(obj: Any, fmt: str, path: str | None) -> None:
    text = dumps(obj) if fmt == "json" else "\n".join(_text(obj))
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")


def main(argv: list[str] | None = None) -> int:
    level = os.environ.get("MENUFORGE_LOG", "warn").lower()
    logging.basicConfig(level=LOG_LEVELS.get(level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = _config(args)
        report, artefact = COMMANDS[args.command](args, cfg)
        if cfg.output and artefact is not report:
            write_json(cfg.output, artefact)
            _emit(report, cfg.format, cfg.report)
        elif cfg.output:
            _emit(report, cfg.format, cfg.output)
        else:
            _emit(report, cfg.format, cfg.report)
    except ValidationError as exc:
        print(f"menuforge: invalid input: {exc}", file=sys.stderr)
        return 2
    except BudgetError as exc:
        print(f"menuforge: budget exhausted: {exc}", file=sys.stderr)
        return 3
    except MenuforgeError as exc:
        print(f"menuforge: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"menuforge: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
