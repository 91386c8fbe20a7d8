"""Choosing a CASH distribution by cutting planes.

For a fixed hash cost ``k`` and attacker threshold ``B`` the defender solves

    minimize P
    s.t.  p~ is a nonincreasing distribution on 1..m,
          server cost of (p~, k) <= c_max,
          0 <= P <= 1,
          P >= success(b; p~)  for every allocation b of B guesses,

where ``success(b; p~)`` is linear in ``p~`` once ``b`` is fixed.  There are
exponentially many allocation rows, so they are generated lazily: solve the
relaxation, ask the separation oracle for the attacker's best allocation
against the candidate, add it as a cut, repeat.  Sweeping ``k`` and scoring
each threshold's solution against a rational attacker picks the defense.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Literal, Sequence

import numpy as np

from .adversary import (CashDistribution, cash_best_response, schedule_from_weights,
                        uniform_cash_hash_cost)
from .distribution import PasswordDistribution
from .lp import INFEASIBLE, LinearConstraint, LpError, LpProblem, lp_solve

log = logging.getLogger(__name__)

ORACLE_TOL = 1e-9
PADV = "P"

# Attacker thresholds tried by default, in multiples of c_max.
DEFAULT_THRESHOLD_MULTIPLES = (5e4, 1e6, 1e7, 1.5e7, 2e7, 2.5e7, 2.65e7, 2.8e7, 3e7, 5e7, 1e8)

ThresholdUnits = Literal["guesses", "cost"]


class InfeasibleParameters(ValueError):
    """No CASH distribution can meet the cost cap for this ``k``."""


class CutBudgetExceeded(RuntimeError):
    """Cutting-plane loop ran out of rounds before reaching the slack tolerance."""

    def __init__(self, message: str, best: "ThresholdSolution | None"):
        super().__init__(message)
        self.best = best

    @property
    def residual_slack(self) -> float:
        return self.best.residual_slack if self.best else math.inf


def p_var(j: int) -> str:
    """LP variable name of the runtime weight for ``t = j`` (1-based)."""
    return f"p{j}"


@dataclass
class OptimizerConfig:
    epsilon: float = 0.02
    k_set: Sequence[float] | None = None
    threshold_set: Sequence[int] | None = None
    m: int = 50
    max_cut_rounds: int = 200
    # "guesses": B counts hash evaluations.  "cost": B is a budget in base-hash
    # units, so the attacker gets floor(B / k) evaluations of H^k.
    threshold_units: ThresholdUnits = "cost"

    def resolved_k_set(self, c_max: float, alpha: float) -> list[float]:
        ks = list(self.k_set) if self.k_set is not None else default_k_set(c_max, alpha, self.m)
        if not ks:
            raise ValueError("k_set is empty")
        for k in ks:
            if k <= 0 or (1 - alpha) * self.m * k > c_max * (1 + 1e-12):
                raise InfeasibleParameters(f"k={k} is infeasible for m={self.m}, "
                                           f"alpha={alpha}, c_max={c_max}")
        return ks

    def resolved_thresholds(self, c_max: float) -> list[int]:
        if self.threshold_set is not None:
            return [int(b) for b in self.threshold_set]
        return default_thresholds(c_max)


def max_hash_cost(c_max: float, alpha: float, m: int) -> float:
    """Largest ``k`` admitting any feasible distribution (all mass on ``t = 1``)."""
    return c_max / ((1 - alpha) * m + alpha)


def default_k_set(c_max: float, alpha: float, m: int, size: int = 20) -> list[float]:
    k_max = max_hash_cost(c_max, alpha, m)
    return [k_max * i / size for i in range(1, size + 1)]


def default_thresholds(c_max: float) -> list[int]:
    return [int(round(x * c_max)) for x in DEFAULT_THRESHOLD_MULTIPLES]


def server_cost(cash: CashDistribution | Sequence[float], k: float, m: int, alpha: float) -> float:
    """Amortized hashing cost per login when a fraction ``alpha`` of logins are correct."""
    w = cash.weights if isinstance(cash, CashDistribution) else np.asarray(cash, dtype=float)
    if len(w) != m:
        raise ValueError(f"distribution has {len(w)} weights, expected m={m}")
    return (1 - alpha) * k * m + alpha * k * float(np.dot(np.arange(1, m + 1), w))


def initial_constraints(m: int, k: float, c_max: float, alpha: float) -> list[LinearConstraint]:
    """Distribution, monotonicity and cost rows of the threshold LP.

    Box bounds ``0 <= p~_j <= 1`` and ``0 <= P <= 1`` are returned separately
    by :func:`variable_bounds`.
    """
    if (1 - alpha) * m * k > c_max:
        raise InfeasibleParameters(
            f"(1 - alpha) * m * k = {(1 - alpha) * m * k:g} exceeds c_max = {c_max:g}")
    rows = [LinearConstraint({p_var(j): 1.0 for j in range(1, m + 1)}, "==", 1.0, "sum")]
    for j in range(1, m):
        rows.append(LinearConstraint({p_var(j): 1.0, p_var(j + 1): -1.0}, ">=", 0.0,
                                     f"monotone {j}"))
    rows.append(LinearConstraint({p_var(j): alpha * k * j for j in range(1, m + 1)}, "<=",
                                 c_max - (1 - alpha) * m * k, "cost"))
    return rows


def variable_bounds(m: int) -> dict[str, tuple[float, float]]:
    bounds = {p_var(j): (0.0, 1.0) for j in range(1, m + 1)}
    bounds[PADV] = (0.0, 1.0)
    return bounds


def check_allocation(dist: PasswordDistribution, m: int, b: Sequence[int]) -> np.ndarray:
    b = np.asarray(b, dtype=np.int64)
    if b.shape != dist.counts.shape:
        raise ValueError(f"allocation has {b.size} entries, expected {dist.num_classes}")
    if np.any(b < 0) or np.any(b > m * dist.counts):
        raise ValueError("allocation entries must satisfy 0 <= b_i <= m * n_i")
    return b


def allocation_coefficients(dist: PasswordDistribution, m: int, b: Sequence[int]) -> np.ndarray:
    """Coefficient of each ``p~_j`` in the success of allocation ``b``.

    ``b_i`` guesses spread evenly over the ``n_i`` passwords of class ``i``
    cover runtimes ``1..q`` for every password and runtime ``q + 1`` for ``r``
    of them, where ``b_i = q * n_i + r``.
    """
    b = check_allocation(dist, m, b)
    q, r = np.divmod(b, dist.counts)
    coef = np.zeros(m + 1)
    # full columns: +p_i * n_i on p~_1..p~_q, via a difference array
    np.add.at(coef, np.zeros_like(q), dist.probabilities * dist.counts)
    np.add.at(coef, q, -dist.probabilities * dist.counts)
    coef = np.cumsum(coef)
    partial = r > 0
    np.add.at(coef, q[partial], dist.probabilities[partial] * r[partial])
    return coef[:m]


def allocation_success(dist: PasswordDistribution, cash: CashDistribution | Sequence[float],
                       b: Sequence[int]) -> float:
    """Fraction of accounts cracked by spending ``b_i`` evaluations on class ``i``."""
    w = cash.weights if isinstance(cash, CashDistribution) else np.asarray(cash, dtype=float)
    return float(np.dot(allocation_coefficients(dist, len(w), b), w))


def greedy_allocation(dist: PasswordDistribution, weights: Sequence[float], guesses: int) -> np.ndarray:
    """Per-class guess counts from taking the ``guesses`` likeliest (password, t) pairs."""
    sched = schedule_from_weights(dist, np.asarray(weights, dtype=float))
    before = np.cumsum(sched.counts) - sched.counts
    take = np.clip(guesses - before, 0, sched.counts)
    return np.bincount(sched.class_index, weights=take,
                       minlength=dist.num_classes).round().astype(np.int64)


@dataclass
class Cut:
    """A constraint violated by the candidate, and by how much."""

    constraint: LinearConstraint
    slack: float
    allocation: tuple[int, ...] | None = None


def allocation_cut(dist: PasswordDistribution, m: int, b: Sequence[int]) -> LinearConstraint:
    coef = allocation_coefficients(dist, m, b)
    row = {PADV: 1.0}
    row.update({p_var(j + 1): -c for j, c in enumerate(coef) if c != 0})
    return LinearConstraint(row, ">=", 0.0, "guess allocation")


def separation_oracle(dist: PasswordDistribution, weights: Sequence[float], p_adv: float,
                      guesses: int, k: float, c_max: float, alpha: float) -> Cut | None:
    """Return a constraint the candidate ``(weights, p_adv)`` violates, or None if feasible.

    Checks the distribution, cost, monotonicity and range rows first; then
    finds the attacker's best allocation of ``guesses`` evaluations against
    ``weights`` and tests whether ``p_adv`` bounds its success.
    """
    w = np.asarray(weights, dtype=float)
    m = len(w)
    total = float(w.sum())
    if abs(total - 1.0) > ORACLE_TOL:
        return Cut(LinearConstraint({p_var(j): 1.0 for j in range(1, m + 1)}, "==", 1.0, "sum"),
                   abs(total - 1.0))
    cost = server_cost(w, k, m, alpha)
    if cost > c_max + ORACLE_TOL:
        return Cut(initial_constraints(m, k, c_max, alpha)[-1], cost - c_max)
    for j in range(m):
        if w[j] < -ORACLE_TOL:
            return Cut(LinearConstraint({p_var(j + 1): 1.0}, ">=", 0.0, f"nonnegative {j + 1}"),
                       -w[j])
        if j + 1 < m and w[j + 1] > w[j] + ORACLE_TOL:
            return Cut(LinearConstraint({p_var(j + 1): 1.0, p_var(j + 2): -1.0}, ">=", 0.0,
                                        f"monotone {j + 1}"), w[j + 1] - w[j])
    if p_adv > 1 + ORACLE_TOL:
        return Cut(LinearConstraint({PADV: 1.0}, "<=", 1.0, "P <= 1"), p_adv - 1)
    if p_adv < -ORACLE_TOL:
        return Cut(LinearConstraint({PADV: 1.0}, ">=", 0.0, "P >= 0"), -p_adv)

    b = greedy_allocation(dist, w, guesses)
    success = allocation_success(dist, w, b)
    if p_adv < success - ORACLE_TOL:
        return Cut(allocation_cut(dist, m, b), success - p_adv, tuple(int(x) for x in b))
    return None


@dataclass
class ThresholdSolution:
    cash: CashDistribution
    k: float
    p_adv: float
    cut_rounds: int
    residual_slack: float
    threshold: int
    guesses: int
    objective_history: list[float] = field(default_factory=list)
    # cut rounds used by every converged k of the sweep
    sweep_rounds: dict[float, int] = field(default_factory=dict)


@dataclass
class DefenseSolution:
    cash: CashDistribution
    k: float
    predicted_cracked: float
    source_threshold: int | Literal["uniform"]
    uniform_cracked: float = math.nan


def threshold_guesses(threshold: int, k: float, units: ThresholdUnits) -> int:
    if units == "guesses":
        return int(threshold)
    if units == "cost":
        return int(math.floor(threshold / k * (1 + 1e-12)))
    raise ValueError(f"unknown threshold units {units!r}")


def _cutting_planes(dist: PasswordDistribution, guesses: int, k: float, c_max: float,
                    alpha: float, config: OptimizerConfig, threshold: int) -> ThresholdSolution | None:
    """Cutting-plane loop for one ``k``.  None when the LP is infeasible."""
    m = config.m
    constraints = initial_constraints(m, k, c_max, alpha)
    bounds = variable_bounds(m)
    seen: set[tuple[int, ...]] = set()
    rounds = 0
    history: list[float] = []
    while True:
        sol = lp_solve(LpProblem({PADV: 1.0}, constraints, bounds))
        if sol.status == INFEASIBLE:
            log.info("k=%g: cost cap unattainable, skipping", k)
            return None
        if not sol.optimal:
            raise LpError(f"threshold LP returned {sol.status}")
        history.append(sol.objective)
        weights = np.array([sol.values[p_var(j)] for j in range(1, m + 1)])
        p_adv = sol.values[PADV]
        cut = separation_oracle(dist, weights, p_adv, guesses, k, c_max, alpha)
        slack = 0.0 if cut is None else cut.slack
        current = ThresholdSolution(CashDistribution.clean(weights), k, p_adv, rounds, slack,
                                    threshold, guesses, list(history))
        if cut is None or slack <= config.epsilon:
            return current
        if cut.allocation is None or cut.allocation in seen:
            # LP tolerance dithering: the row is already present.
            log.debug("k=%g: repeated cut with slack %g", k, slack)
            return current
        if rounds >= config.max_cut_rounds:
            raise CutBudgetExceeded(
                f"k={k:g}, B={threshold}: no convergence in {rounds} rounds "
                f"(slack {slack:g})", current)
        seen.add(cut.allocation)
        constraints.append(cut.constraint)
        rounds += 1


def optimize_for_threshold(dist: PasswordDistribution, threshold: int, c_max: float,
                           alpha: float, config: OptimizerConfig) -> ThresholdSolution:
    """Best distribution and hash cost against an attacker limited to ``threshold``.

    Each ``k`` in the sweep is solved independently; the smallest attacker
    success wins, ties going to the smaller ``k``.  A ``k`` whose loop runs out
    of rounds is dropped; :class:`CutBudgetExceeded` is raised only when no
    ``k`` converged.
    """
    best: ThresholdSolution | None = None
    rounds: dict[float, int] = {}
    failure: CutBudgetExceeded | None = None
    for k in sorted(config.resolved_k_set(c_max, alpha)):
        guesses = threshold_guesses(threshold, k, config.threshold_units)
        try:
            sol = _cutting_planes(dist, guesses, k, c_max, alpha, config, threshold)
        except CutBudgetExceeded as exc:
            log.warning("%s", exc)
            if failure is None or exc.residual_slack < failure.residual_slack:
                failure = exc
            continue
        if sol is None:
            continue
        rounds[k] = sol.cut_rounds
        log.debug("B=%d k=%g: P=%.6g after %d cuts", threshold, k, sol.p_adv, sol.cut_rounds)
        if best is None or sol.p_adv < best.p_adv - 1e-12:
            best = sol
    if best is None:
        if failure is not None:
            raise failure
        raise InfeasibleParameters("no hash cost in k_set admits a feasible distribution")
    best.sweep_rounds = rounds
    return best


def _optimize_job(args):
    dist, threshold, c_max, alpha, config = args
    try:
        return optimize_for_threshold(dist, threshold, c_max, alpha, config)
    except (CutBudgetExceeded, LpError, InfeasibleParameters) as exc:
        return exc


def threshold_candidates(dist: PasswordDistribution, c_max: float, alpha: float,
                         config: OptimizerConfig, workers: int = 1
                         ) -> list[tuple[int, ThresholdSolution | Exception]]:
    """Run :func:`optimize_for_threshold` for every threshold in the config.

    These do not depend on the attacker's value, so one set of candidates can
    be scored against many values.
    """
    # configuration errors surface here rather than as per-threshold failures
    config.resolved_k_set(c_max, alpha)
    thresholds = config.resolved_thresholds(c_max)
    if not thresholds:
        raise ValueError("threshold_set is empty")
    jobs =[(dist, b, c_max, alpha, config) for b in thresholds]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_optimize_job, jobs))
    else:
        results = [_optimize_job(job) for job in jobs]
    return list(zip(thresholds, results))


def select_defense(dist: PasswordDistribution, v_hat: float, c_max: float, alpha: float, m: int,
                   candidates: Iterable[tuple[int, ThresholdSolution | Exception]]) -> DefenseSolution:
    """Keep whichever candidate (uniform CASH included) lets a value-``v_hat`` attacker crack least.

    Later candidates win ties.
    """
    k_unif = uniform_cash_hash_cost(c_max, m, alpha)
    uniform = CashDistribution.uniform(m)
    unif_cracked = cash_best_response(dist, uniform, v_hat, k_unif).cracked
    best = DefenseSolution(uniform, k_unif, unif_cracked, "uniform", unif_cracked)
    for threshold, sol in candidates:
        if isinstance(sol, Exception):
            log.warning("threshold %d skipped: %s", threshold, sol)
            continue
        cracked = cash_best_response(dist, sol.cash, v_hat, sol.k).cracked
        if cracked <= best.predicted_cracked:
            best = DefenseSolution(sol.cash, sol.k, cracked, threshold, unif_cracked)
    assert best.predicted_cracked <= unif_cracked
    return best


def find_cash_distribution(dist: PasswordDistribution, v_hat: float, c_max: float, alpha: float,
                           config: OptimizerConfig, workers: int = 1) -> DefenseSolution:
    candidates = threshold_candidates(dist, c_max, alpha, config, workers)
    return select_defense(dist, v_hat, c_max, alpha, config.m, candidates)


def write_cash(path: str | Path, defense: DefenseSolution, *, alpha: float, c_max: float,
               epsilon: float, v_hat: float | None = None) -> None:
    w = defense.cash.weights
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# k {defense.k:.17g}\n")
        fh.write(f"# m {len(w)}\n")
        fh.write(f"# alpha {alpha:.17g}\n")
        fh.write(f"# c_max {c_max:.17g}\n")
        fh.write(f"# epsilon {epsilon:.17g}\n")
        fh.write(f"# source_threshold {defense.source_threshold}\n")
        if v_hat is not None:
            fh.write(f"# v_hat {v_hat:.17g}\n")
        fh.write(f"# predicted_cracked {defense.predicted_cracked:.17g}\n")
        for t, p in enumerate(w, start=1):
            fh.write(f"{t} {p:.17g}\n")


def read_cash(path: str | Path) -> tuple[CashDistribution, dict[str, str]]:
    """Parse a CASH distribution file; returns the distribution and its header fields."""
    meta: dict[str, str] = {}
    rows: list[tuple[int, float]] = []
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split(None, 1)
                if len(parts) == 2:
                    meta[parts[0]] = parts[1]
                continue
            t, p = line.split()
            rows.append((int(t), float(p)))
    rows.sort()
    if [t for t, _ in rows] != list(range(1, len(rows) + 1)):
        raise ValueError(f"{path}: runtimes must be 1..m")
    return CashDistribution([p for _, p in rows]), meta
