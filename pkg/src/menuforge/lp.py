"""Linear programs: a small model container and a dense two-phase simplex.

Models are maximisation problems with ``<=``, ``>=`` and ``=`` rows and
per-variable bounds. The built-in solver is a textbook dense tableau
simplex with Bland's rule, which cannot cycle. For large models ``lp_solve``
hands the same model to the HiGHS dual simplex shipped with scipy, then
applies the identical residual certificate to its answer.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .errors import NumericalFailure

LE, GE, EQ = "<=", ">=", "="
# tableau cells above which "auto" switches to HiGHS
DENSE_CELL_LIMIT = 60_000
PIVOT_REL = 1e-7


class LPStatus(enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


@dataclass(frozen=True, eq=False)
class LPModel:
    """``max c @ x`` subject to ``A x (senses) b`` and ``lb <= x <= ub``."""

    c: np.ndarray
    A: sp.csr_matrix
    senses: tuple[str, ...]
    b: np.ndarray
    lb: np.ndarray
    ub: np.ndarray

    def __post_init__(self):
        nvar = self.c.size
        if self.A.shape != (len(self.senses), nvar) or self.b.size != len(self.senses):
            raise ValueError(f"row shape mismatch: A {self.A.shape}, {len(self.senses)} senses, b {self.b.size}")
        if self.lb.size != nvar or self.ub.size != nvar:
            raise ValueError("bounds must match the number of variables")
        if not np.all(np.isfinite(self.b)):
            raise ValueError("right-hand sides must be finite")
        if any(s not in (LE, GE, EQ) for s in self.senses):
            raise ValueError(f"unknown row sense in {set(self.senses)}")

    @classmethod
    def dense(cls, c, A=None, senses=(), b=(), lb=None, ub=None) -> "LPModel":
        c = np.asarray(c, dtype=np.float64)
        n = c.size
        A = sp.csr_matrix(np.zeros((0, n)) if A is None or len(senses) == 0 else np.asarray(A, dtype=np.float64))
        lb = np.zeros(n) if lb is None else np.asarray(lb, dtype=np.float64)
        ub = np.full(n, np.inf) if ub is None else np.asarray(ub, dtype=np.float64)
        return cls(c, A, tuple(senses), np.asarray(b, dtype=np.float64).reshape(-1), lb, ub)

    @property
    def num_vars(self) -> int:
        return self.c.size

    @property
    def num_rows(self) -> int:
        return len(self.senses)


@dataclass
class LPBuilder:
    """Incremental construction of an :class:`LPModel` from sparse rows."""

    c: list[float] = field(default_factory=list)
    lb: list[float] = field(default_factory=list)
    ub: list[float] = field(default_factory=list)
    _rows: list[int] = field(default_factory=list)
    _cols: list[int] = field(default_factory=list)
    _vals: list[float] = field(default_factory=list)
    senses: list[str] = field(default_factory=list)
    b: list[float] = field(default_factory=list)

    def add_var(self, obj: float = 0.0, lb: float = 0.0, ub: float = math.inf) -> int:
        self.c.append(float(obj))
        self.lb.append(float(lb))
        self.ub.append(float(ub))
        return len(self.c) - 1

    def add_row(self, coefs: dict[int, float] | list[tuple[int, float]], sense: str, rhs: float) -> int:
        items = coefs.items() if isinstance(coefs, dict) else coefs
        r = len(self.senses)
        for j, a in items:
            if a != 0:
                self._rows.append(r)
                self._cols.append(j)
                self._vals.append(float(a))
        self.senses.append(sense)
        self.b.append(float(rhs))
        return r

    def build(self) -> LPModel:
        A = sp.csr_matrix(
            (self._vals, (self._rows, self._cols)), shape=(len(self.senses), len(self.c))
        )
        A.sum_duplicates()
        return LPModel(
            np.array(self.c), A, tuple(self.senses), np.array(self.b), np.array(self.lb), np.array(self.ub)
        )


@dataclass(frozen=True, eq=False)
class LPSolution:
    status: LPStatus
    x: np.ndarray | None
    objective: float | None
    method: str = "simplex"


# ---------------------------------------------------------------------------
# dense simplex


def _standard_form(model: LPModel):
    """Rewrite as ``max c' y`` with ``A' y (senses) b``, ``y >= 0``.

    Returns the pieces plus a map recovering ``x = offset + M y``.
    """
    n = model.num_vars
    A = model.A.toarray()
    cols, obj, recover = [], [], []  # recover: (var, sign) per standard column
    offset = np.zeros(n)
    extra_rows, extra_b = [], []
    for j in range(n):
        lo, hi, cj = model.lb[j], model.ub[j], model.c[j]
        if lo > hi:
            return None
        if math.isfinite(lo):
            offset[j] = lo
            cols.append(A[:, j])
            obj.append(cj)
            recover.append((j, 1.0))
            if math.isfinite(hi):
                extra_rows.append((len(cols) - 1, hi - lo))
        elif math.isfinite(hi):
            offset[j] = hi
            cols.append(-A[:, j])
            obj.append(-cj)
            recover.append((j, -1.0))
        else:
            cols.append(A[:, j])
            obj.append(cj)
            recover.append((j, 1.0))
            cols.append(-A[:, j])
            obj.append(-cj)
            recover.append((j, -1.0))
    m = model.num_rows
    N = len(cols)
    Astd = np.column_stack(cols) if cols else np.zeros((m, 0))
    bstd = model.b - A @ offset
    senses = list(model.senses)
    if extra_rows:
        E = np.zeros((len(extra_rows), N))
        for r, (col, cap) in enumerate(extra_rows):
            E[r, col] = 1.0
            extra_b.append(cap)
        Astd = np.vstack([Astd, E])
        bstd = np.concatenate([bstd, extra_b])
        senses += [LE] * len(extra_rows)
    return Astd, np.asarray(bstd, dtype=np.float64), senses, np.array(obj), recover, offset


class _Tableau:
    """Dense simplex tableau with Bland's rule.

    The tableau is rebuilt from the original columns every ``REFACTOR``
    pivots so rounding errors cannot accumulate.
    """

    REFACTOR = 50

    def __init__(self, F: np.ndarray, b: np.ndarray, basis: list[int], tol: float):
        self.F, self.b, self.basis, self.tol = F, b, list(basis), tol
        m, width = F.shape
        self.m = m
        self.T = np.zeros((m + 1, width + 1))
        self.cost = np.zeros(width)
        self.pivots = 0
        self.refactor()

    def refactor(self):
        m = self.m
        try:
            sol = np.linalg.solve(self.F[:, self.basis], np.column_stack([self.F, self.b]))
        except np.linalg.LinAlgError:
            if self.pivots == 0:
                raise NumericalFailure("singular starting basis") from None
            return
        self.T[:m] = sol
        self.T[:m, -1] = np.maximum(self.T[:m, -1], 0.0)
        self._objective_row()

    def _objective_row(self):
        m = self.m
        cb = self.cost[self.basis]
        self.T[m, :-1] = cb @ self.T[:m, :-1] - self.cost
        self.T[m, -1] = cb @ self.T[:m, -1]

    def set_objective(self, cost: np.ndarray):
        self.cost = cost
        self._objective_row()

    def pivot(self, r: int, j: int):
        T = self.T
        T[r, :] /= T[r, j]
        col = T[:, j].copy()
        col[r] = 0.0
        nz = np.flatnonzero(col)
        if nz.size:
            T[nz, :] -= np.outer(col[nz], T[r, :])
        T[:, j] = 0.0
        T[r, j] = 1.0
        self.basis[r] = j
        self.pivots += 1
        if self.pivots % self.REFACTOR == 0:
            self.refactor()

    def run(self, allowed: np.ndarray, max_iter: int) -> str:
        T, tol, m = self.T, self.tol, self.m
        for _ in range(max_iter):
            red = T[m, :-1]
            cand = np.flatnonzero((red < -tol) & allowed)
            if cand.size == 0:
                return "optimal"
            # Bland: lowest improving column, then lowest basic index among ratio ties
            j = int(cand[0])
            colj = T[:m, j]
            # entries this small relative to the column are rounding noise
            pos = np.flatnonzero(colj > max(tol, PIVOT_REL * float(np.abs(colj).max(initial=0.0))))
            if pos.size == 0:
                return "unbounded"
            ratios = np.maximum(T[pos, -1], 0.0) / colj[pos]
            best = ratios.min()
            ties = pos[ratios <= best + tol * max(1.0, best)]
            r = int(min(ties, key=lambda i: self.basis[i]))
            self.pivot(r, j)
        raise NumericalFailure(f"simplex did not terminate within {max_iter} pivots")


def _simplex(model: LPModel, tol: float) -> LPSolution:
    std = _standard_form(model)
    if std is None:
        return LPSolution(LPStatus.INFEASIBLE, None, None)
    A, b, senses, cost, recover, offset = std
    m, N = A.shape
    A = A.copy()
    senses = list(senses)
    for i in range(m):
        if b[i] < 0:
            A[i] *= -1
            b[i] *= -1
            senses[i] = {LE: GE, GE: LE, EQ: EQ}[senses[i]]
    # equilibrate: unit max-norm rows, then unit max-norm columns
    rs = np.abs(A).max(axis=1) if N else np.ones(m)
    rs[rs == 0] = 1.0
    A /= rs[:, None]
    b = b / rs
    cs = np.abs(A).max(axis=0) if m else np.ones(N)
    cs[cs == 0] = 1.0
    A /= cs[None, :]
    cscaled = cost / cs
    cnorm = float(np.abs(cscaled).max(initial=0.0)) or 1.0
    cscaled = cscaled / cnorm

    n_slack = sum(s != EQ for s in senses)
    n_art = sum(s != LE for s in senses)
    width = N + n_slack + n_art
    F = np.zeros((m, width))
    F[:, :N] = A
    basis = [0] * m
    s_col, a_col = N, N + n_slack
    art = []
    for i, s in enumerate(senses):
        if s == LE:
            F[i, s_col] = 1.0
            basis[i] = s_col
            s_col += 1
        else:
            if s == GE:
                F[i, s_col] = -1.0
                s_col += 1
            F[i, a_col] = 1.0
            basis[i] = a_col
            art.append(a_col)
            a_col += 1

    tab = _Tableau(F, b, basis, tol)
    max_iter = 50 * (m + width) + 1000
    is_art = np.zeros(width, dtype=bool)
    is_art[art] = True
    if art:
        c1 = np.zeros(width)
        c1[art] = -1.0
        tab.set_objective(c1)
        tab.run(np.ones(width, dtype=bool), max_iter)
        tab.refactor()
        if -tab.T[m, -1] > 10 * tol * max(1.0, float(b.max(initial=0.0))):
            return LPSolution(LPStatus.INFEASIBLE, None, None)
        # pivot zero-level artificials out where possible; the rest sit on redundant rows
        for i in range(m):
            if is_art[tab.basis[i]]:
                row = tab.T[i, :width]
                cand = np.flatnonzero((np.abs(row) > tol) & ~is_art)
                if cand.size:
                    tab.pivot(i, int(cand[0]))

    c2 = np.zeros(width)
    c2[:N] = cscaled
    tab.set_objective(c2)
    status = tab.run(~is_art, max_iter)
    if status == "unbounded":
        return LPSolution(LPStatus.UNBOUNDED, None, None)
    tab.refactor()
    y = np.zeros(width)
    y[tab.basis] = np.maximum(tab.T[:m, -1], 0.0)
    y = y[:N] / cs
    x = offset.copy()
    for col, (j, sign) in enumerate(recover):
        x[j] += sign * y[col]
    return LPSolution(LPStatus.OPTIMAL, x, float(model.c @ x), "simplex")


# ---------------------------------------------------------------------------
# HiGHS path


def _highs(model: LPModel, tol: float) -> LPSolution:
    A = model.A.tocsr()
    s = np.array(model.senses)
    le, ge, eq = s == LE, s == GE, s == EQ
    A_ub = sp.vstack([A[le], -A[ge]]).tocsr() if (le.any() or ge.any()) else None
    b_ub = np.concatenate([model.b[le], -model.b[ge]]) if A_ub is not None else None
    A_eq = A[eq] if eq.any() else None
    b_eq = model.b[eq] if eq.any() else None
    bounds = np.column_stack([model.lb, model.ub])
    bounds = [(None if not math.isfinite(lo) else lo, None if not math.isfinite(hi) else hi) for lo, hi in bounds]
    res = linprog(
        -model.c,
        A_ub=A_ub,
        b_ub=b_ub,
        A_eq=A_eq,
        b_eq=b_eq,
        bounds=bounds,
        method="highs-ds",
        options={"primal_feasibility_tolerance": max(tol, 1e-10), "dual_feasibility_tolerance": max(tol, 1e-10)},
    )
    if res.status == 2:
        return LPSolution(LPStatus.INFEASIBLE, None, None, "highs")
    if res.status == 3:
        return LPSolution(LPStatus.UNBOUNDED, None, None, "highs")
    if res.status != 0:
        raise NumericalFailure(f"HiGHS failed: {res.message}")
    x = np.clip(res.x, model.lb, model.ub)
    return LPSolution(LPStatus.OPTIMAL, x, float(model.c @ x), "highs")


def max_violation(model: LPModel, x: np.ndarray) -> float:
    """Largest scaled violation of any row or bound at ``x``."""
    Ax = model.A @ x
    absA = abs(model.A) @ np.abs(x)
    scale = np.maximum(1.0, np.maximum(np.abs(model.b), absA))
    s = np.array(model.senses)
    viol = np.zeros(model.num_rows)
    viol = np.where(s == LE, Ax - model.b, viol)
    viol = np.where(s == GE, model.b - Ax, viol)
    viol = np.where(s == EQ, np.abs(Ax - model.b), viol)
    worst = float((viol / scale).max(initial=0.0))
    bnd = np.maximum(model.lb - x, x - model.ub)
    bnd = bnd[np.isfinite(bnd)]
    return max(worst, float(bnd.max(initial=0.0)))


def lp_solve(model: LPModel, tolerance: float = 1e-9, method: str = "auto") -> LPSolution:
    """Solve ``model``; certify feasibility of an optimal answer within ``10 * tolerance``.

    ``method`` is ``"simplex"`` (dense Bland tableau), ``"highs"`` or
    ``"auto"``, which picks the dense simplex when the tableau has at most
    ``DENSE_CELL_LIMIT`` cells.
    """
    if method == "auto":
        cells = (model.num_rows + 1) * (2 * model.num_vars + 2 * model.num_rows + 1)
        method = "simplex" if cells <= DENSE_CELL_LIMIT else "highs"
    if method == "simplex":
        sol = _simplex(model, tolerance)
    elif method == "highs":
        sol = _highs(model, tolerance)
    else:
        raise ValueError(f"unknown LP method {method!r}")
    if sol.status is LPStatus.OPTIMAL:
        v = max_violation(model, sol.x)
        if v > 10 * tolerance:
            raise NumericalFailure(f"LP residual {v:.3g} exceeds {10 * tolerance:.3g} ({sol.method})")
    return sol
