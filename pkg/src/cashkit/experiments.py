"""Defense comparison curves, server-cost distributions and login simulation."""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .adversary import (CashDistribution, cash_best_response, deterministic_best_response,
                        uniform_cash_hash_cost, uniform_success_rate)
from .distribution import PasswordDistribution
from .mechanism import RecordStore
from .optimizer import DefenseSolution, OptimizerConfig, select_defense, threshold_candidates

log = logging.getLogger(__name__)

# v / c_max grid, dense where the three defenses separate
DEFAULT_V_GRID = (1e2, 5e2, 1e3, 5e3, 1e4, 5e4, 1e5, 5e5, 1e6, 5e6, 1e7, 1.5e7, 2e7, 2.5e7,
                  2.65e7, 2.7e7, 2.75e7, 2.8e7, 2.9e7, 3e7, 7e7, 1e8)


@dataclass
class CurveRow:
    v_over_cmax: float
    p_cash: float
    p_unif: float
    p_det: float
    note: str = ""


def generate_curves(dist: PasswordDistribution, alpha: float, c_max: float, m: int,
                    v_grid: Sequence[float], v_hat: float | str = "match",
                    config: OptimizerConfig | None = None, workers: int = 1) -> list[CurveRow]:
    """Fraction cracked under optimized CASH, uniform CASH and deterministic stretching.

    ``v_grid`` is in units of ``c_max``.  With ``v_hat="match"`` the defender
    knows the attacker's value at each point; a number fixes the defender's
    estimate (also in units of ``c_max``) for every point.
    """
    if not len(v_grid):
        raise ValueError("empty v grid")
    if any(b < a for a, b in zip(v_grid, v_grid[1:])):
        raise ValueError("v grid must be ascending")
    config = config or OptimizerConfig(m=m)
    if config.m != m:
        raise ValueError(f"config.m={config.m} does not match m={m}")
    candidates = threshold_candidates(dist, c_max, alpha, config, workers)
    failed = [b for b, sol in candidates if isinstance(sol, Exception)]

    fixed: DefenseSolution | None = None
    if v_hat != "match":
        fixed = select_defense(dist, float(v_hat) * c_max, c_max, alpha, m, candidates)

    rows: list[CurveRow] = []
    previous_source = None
    for ratio in v_grid:
        v = ratio * c_max
        defense = fixed or select_defense(dist, v, c_max, alpha, m, candidates)
        notes = []
        if failed:
            notes.append("optimizer failed for B=" + "/".join(map(str, failed)))
        if previous_source is not None and defense.source_threshold != previous_source:
            notes.append(f"defense changed to B={defense.source_threshold}")
        previous_source = defense.source_threshold
        rows.append(CurveRow(
            v_over_cmax=ratio,
            p_cash=cash_best_response(dist, defense.cash, v, defense.k).cracked,
            p_unif=uniform_success_rate(dist, v, c_max, m, alpha).cracked,
            p_det=deterministic_best_response(dist, v, c_max).cracked,
            note="; ".join(notes),
        ))
    return rows


def write_curves_csv(rows: Sequence[CurveRow], fh) -> None:
    fh.write("v_over_cmax,p_cash,p_unif,p_det,note\n")
    for r in rows:
        fh.write(f"{r.v_over_cmax:.9g},{r.p_cash:.9g},{r.p_unif:.9g},{r.p_det:.9g},{r.note}\n")


def cost_distribution(cash: CashDistribution, k: float, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """Support and probabilities of the server's cost for one login.

    A correct password (probability ``alpha``) costs ``k * t``; a wrong one
    costs ``k * m``.
    """
    m = cash.m
    costs = k * np.arange(1, m + 1)
    probs = alpha * cash.weights.copy()
    probs[-1] += 1 - alpha
    return costs, probs


def cost_cdf(defenses: dict[str, tuple[CashDistribution, float]], alpha: float
             ) -> tuple[np.ndarray, dict[str, np.ndarray]]:
    """``Pr[cost <= x]`` for each named ``(distribution, k)`` on the union of their supports."""
    supports = {name: cost_distribution(cash, k, alpha) for name, (cash, k) in defenses.items()}
    grid = np.unique(np.concatenate([c for c, _ in supports.values()]))
    cdfs = {}
    for name, (costs, probs) in supports.items():
        cum = np.cumsum(probs)
        idx = np.searchsorted(costs, grid, side="right") - 1
        cdfs[name] = np.where(idx >= 0, cum[np.maximum(idx, 0)], 0.0)
    return grid, cdfs


def standard_defenses(cash: CashDistribution, k: float, c_max: float, alpha: float
                      ) -> dict[str, tuple[CashDistribution, float]]:
    m = cash.m
    return {
        "cash": (cash, k),
        "uniform": (CashDistribution.uniform(m), uniform_cash_hash_cost(c_max, m, alpha)),
        "deterministic": (CashDistribution([1.0]), c_max),
    }


@dataclass
class SimulationReport:
    accounts: int
    correct_logins: int
    wrong_logins: int
    correct_failures: int
    false_accepts: int
    mean_correct_hashes: float
    mean_wrong_hashes: float
    analytic_correct_hashes: float
    analytic_wrong_hashes: float

    @property
    def mean_hashes(self) -> float:
        total = self.correct_logins + self.wrong_logins
        return (self.mean_correct_hashes * self.correct_logins
                + self.mean_wrong_hashes * self.wrong_logins) / max(total, 1)


def simulate_logins(cash: CashDistribution, k_iter: int, accounts: int, alpha: float = 1.0,
                    seed: int | None = None, salt_bits: int = 128) -> SimulationReport:
    """Create ``accounts`` records, then log each in once, correctly with probability ``alpha``."""
    rng = random.Random(seed)
    store = RecordStore(cash)
    passwords = {}
    for i in range(accounts):
        user = f"user{i}"
        passwords[user] = f"pw-{rng.getrandbits(64):016x}"
        store.create_account(user, passwords[user], k_iter, salt_bits, rng)

    correct = wrong = correct_failures = false_accepts = 0
    correct_cost = wrong_cost = 0
    for user, pw in passwords.items():
        if rng.random() < alpha:
            res = store.authenticate(user, pw)
            correct += 1
            correct_cost += res.base_hashes
            correct_failures += not res.ok
        else:
            res = store.authenticate(user, pw + "!")
            wrong += 1
            wrong_cost += res.base_hashes
            false_accepts += res.ok
    return SimulationReport(
        accounts=accounts,
        correct_logins=correct,
        wrong_logins=wrong,
        correct_failures=correct_failures,
        false_accepts=false_accepts,
        mean_correct_hashes=correct_cost / max(correct, 1),
        mean_wrong_hashes=wrong_cost / max(wrong, 1),
        analytic_correct_hashes=k_iter * cash.expected_runtime(),
        analytic_wrong_hashes=float(k_iter * cash.m),
    )
