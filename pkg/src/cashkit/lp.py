"""Small dense linear programs.

A two-phase tableau simplex sized for the CASH cutting-plane loop: at most a
few dozen variables and a few hundred rows.  Pricing is Dantzig's rule until
the solver stalls on degenerate pivots, then Bland's rule, which cannot cycle.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

log = logging.getLogger(__name__)

PIVOT_TOL = 1e-10
COST_TOL = 1e-11
FEAS_TOL = 1e-9
DEGENERATE_STALL = 50
MAX_PIVOTS = 100_000

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

_RELATIONS = ("<=", ">=", "==")


class LpError(RuntimeError):
    pass


@dataclass
class LinearConstraint:
    coefficients: dict[str, float]
    relation: str
    rhs: float
    label: str = ""

    def __post_init__(self) -> None:
        if self.relation == "=":
            self.relation = "=="
        if self.relation not in _RELATIONS:
            raise ValueError(f"unknown relation {self.relation!r}")
        self.coefficients = {k: float(v) for k, v in self.coefficients.items() if v != 0}
        if not self.coefficients:
            raise ValueError(f"constraint {self.label!r} has no nonzero coefficient")
        self.rhs = float(self.rhs)

    def activity(self, values: Mapping[str, float]) -> float:
        return math.fsum(c * values[name] for name, c in self.coefficients.items())

    def violation(self, values: Mapping[str, float]) -> float:
        """Amount by which ``values`` fail the constraint (0 when satisfied)."""
        lhs = self.activity(values)
        if self.relation == "<=":
            return max(0.0, lhs - self.rhs)
        if self.relation == ">=":
            return max(0.0, self.rhs - lhs)
        return abs(lhs - self.rhs)

    def __str__(self) -> str:
        terms = " + ".join(f"{c:g}*{n}" for n, c in self.coefficients.items())
        return f"{self.label + ': ' if self.label else ''}{terms} {self.relation} {self.rhs:g}"


@dataclass
class LpProblem:
    """``minimize objective . x`` subject to ``constraints`` and per-variable bounds.

    Variables absent from ``bounds`` default to ``[0, inf)``.
    """

    objective: dict[str, float]
    constraints: list[LinearConstraint] = field(default_factory=list)
    bounds: dict[str, tuple[float, float]] = field(default_factory=dict)

    def variables(self) -> list[str]:
        names: dict[str, None] = {}
        for name in self.bounds:
            names[name] = None
        for name in self.objective:
            names[name] = None
        for con in self.constraints:
            for name in con.coefficients:
                names[name] = None
        return list(names)

    def max_violation(self, values: Mapping[str, float]) -> float:
        worst = max((c.violation(values) for c in self.constraints), default=0.0)
        for name, (lo, hi) in self.bounds.items():
            worst = max(worst, lo - values[name], values[name] - hi)
        return worst


@dataclass
class LpSolution:
    status: str
    values: dict[str, float]
    objective: float
    pivots: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


def lp_solve(problem: LpProblem) -> LpSolution:
    names = problem.variables()
    index = {name: j for j, name in enumerate(names)}
    n = len(names)

    lower = np.zeros(n)
    upper = np.full(n, np.inf)
    for name, (lo, hi) in problem.bounds.items():
        if not math.isfinite(lo):
            raise ValueError(f"variable {name!r} must be bounded below")
        lower[index[name]], upper[index[name]] = lo, hi
    if np.any(upper < lower):
        return LpSolution(INFEASIBLE, {}, math.nan)

    cost = np.zeros(n)
    for name, c in problem.objective.items():
        cost[index[name]] = c

    rows: list[np.ndarray] = []
    rels: list[str] = []
    rhs: list[float] = []
    for con in problem.constraints:
        a = np.zeros(n)
        for name, c in con.coefficients.items():
            a[index[name]] = c
        if not np.all(np.isfinite(a)) or not math.isfinite(con.rhs):
            raise ValueError(f"non-finite data in constraint {con.label!r}")
        rows.append(a)
        rels.append(con.relation)
        rhs.append(con.rhs - float(a @ lower))
    for j in np.flatnonzero(np.isfinite(upper)):
        a = np.zeros(n)
        a[j] = 1.0
        rows.append(a)
        rels.append("<=")
        rhs.append(upper[j] - lower[j])

    y, pivots = _solve_standard(cost, rows, rels, rhs)
    if isinstance(y, str):
        return LpSolution(y, {}, math.nan, pivots)
    x = lower + y
    values = {name: float(x[j]) for j, name in enumerate(names)}
    return LpSolution(OPTIMAL, values, float(cost @ x), pivots)


def _solve_standard(cost, rows, rels, rhs):
    """Solve ``min cost . y`` over ``y >= 0`` and the given rows.

    Returns ``(y, pivots)`` or ``(status, pivots)`` when not optimal.
    """
    n = len(cost)
    m = len(rows)
    if m == 0:
        if np.any(cost < -COST_TOL):
            return UNBOUNDED, 0
        return np.zeros(n), 0

    A = np.array(rows, dtype=float).reshape(m, n)
    b = np.array(rhs, dtype=float)
    rels = list(rels)
    flip = b < 0
    A[flip] *= -1
    b[flip] *= -1
    for i in np.flatnonzero(flip):
        rels[i] = {"<=": ">=", ">=": "<=", "==": "=="}[rels[i]]

    n_slack = sum(r != "==" for r in rels)
    n_art = sum(r != "<=" for r in rels)
    width = n + n_slack + n_art
    T = np.zeros((m, width + 1))
    T[:, :n] = A
    T[:, -1] = b
    basis = np.empty(m, dtype=int)
    s = n
    a = n + n_slack
    for i, rel in enumerate(rels):
        if rel == "<=":
            T[i, s] = 1.0
            basis[i] = s
            s += 1
        elif rel == ">=":
            T[i, s] = -1.0
            s += 1
            T[i, a] = 1.0
            basis[i] = a
            a += 1
        else:
            T[i, a] = 1.0
            basis[i] = a
            a += 1
    artificial = np.zeros(width, dtype=bool)
    artificial[n + n_slack:] = True
    scale = max(1.0, float(np.abs(b).max()))

    pivots = 0
    if n_art:
        phase1 = artificial.astype(float)
        status, used = _iterate(T, basis, phase1, np.ones(width, dtype=bool))
        pivots += used
        if status == UNBOUNDED:  # cannot happen: phase-1 objective is bounded below
            raise LpError("phase 1 reported unbounded")
        infeas = float(T[artificial[basis], -1].sum())
        if infeas > FEAS_TOL * scale:
            return INFEASIBLE, pivots
        keep = np.ones(m, dtype=bool)
        for i in range(m):
            if not artificial[basis[i]]:
                continue
            candidates = np.flatnonzero(~artificial & (np.abs(T[i, :width]) > PIVOT_TOL))
            if len(candidates) == 0:
                keep[i] = False  # redundant row
                continue
            j = candidates[np.argmax(np.abs(T[i, candidates]))]
            _pivot(T, basis, i, j)
            pivots += 1
        T = T[keep]
        basis = basis[keep]

    full_cost = np.zeros(width)
    full_cost[:n] = cost
    status, used = _iterate(T, basis, full_cost, ~artificial)
    pivots += used
    if status == UNBOUNDED:
        return UNBOUNDED, pivots

    # Recompute the basic solution from the original data to shed the
    # rounding accumulated by tableau updates.
    M = np.zeros((m, width))
    M[:, :n] = A
    s = n
    for i, rel in enumerate(rels):
        if rel != "==":
            M[i, s] = 1.0 if rel == "<=" else -1.0
            s += 1
    y = np.zeros(width)
    rows_kept = np.flatnonzero(keep) if n_art else np.arange(m)
    try:
        y[basis] = np.linalg.solve(M[np.ix_(rows_kept, basis)], b[rows_kept])
    except np.linalg.LinAlgError:
        y[basis] = T[:, -1]
    else:
        if np.abs(y[basis] - T[:, -1]).max() > 1e-7 * scale:
            y[basis] = T[:, -1]
    y[np.abs(y) < 1e-13] = 0.0
    y = np.maximum(y, 0.0)
    return y[:n], pivots


def _pivot(T: np.ndarray, basis: np.ndarray, row: int, col: int) -> None:
    T[row] /= T[row, col]
    column = T[:, col].copy()
    column[row] = 0.0
    T -= np.outer(column, T[row])
    basis[row] = col


def _iterate(T: np.ndarray, basis: np.ndarray, cost: np.ndarray,
             allowed: np.ndarray) -> tuple[str, int]:
    """Primal simplex on a tableau already in canonical form for ``basis``."""
    width = T.shape[1] - 1
    stall = 0
    pivots = 0
    while True:
        reduced = cost - cost[basis] @ T[:, :width]
        reduced[basis] = 0.0
        eligible = np.flatnonzero(allowed & (reduced < -COST_TOL))
        if len(eligible) == 0:
            return OPTIMAL, pivots
        bland = stall >= DEGENERATE_STALL
        if bland:
            col = int(eligible[0])
        else:
            col = int(eligible[np.argmin(reduced[eligible])])
        column = T[:, col]
        rows = np.flatnonzero(column > PIVOT_TOL)
        if len(rows) == 0:
            return UNBOUNDED, pivots
        ratios = T[rows, -1] / column[rows]
        best = ratios.min()
        ties = rows[ratios <= best + 1e-12 * max(1.0, abs(best))]
        if bland:
            row = int(ties[np.argmin(basis[ties])])
        else:
            row = int(ties[np.argmax(column[ties])])
        stall = stall + 1 if T[row, -1] <= 1e-12 else 0
        _pivot(T, basis, row, col)
        pivots += 1
        if pivots > MAX_PIVOTS:
            raise LpError("simplex pivot limit exceeded")
