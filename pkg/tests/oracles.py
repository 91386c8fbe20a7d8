"""Brute-force reference implementations used to check the fast code paths.

Everything here works password-by-password (never with grouped classes) and,
where cheap enough, in exact rational arithmetic.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from cashkit.distribution import PasswordDistribution, from_frequency_table


@dataclass
class Instance:
    dist: PasswordDistribution
    p: list[Fraction]          # per-class probability, exact
    counts: list[int]
    weights: list[Fraction]    # runtime distribution, exact

    @property
    def m(self) -> int:
        return len(self.weights)

    @property
    def float_weights(self) -> np.ndarray:
        return np.array([float(w) for w in self.weights])


def random_dist(rng: random.Random, max_classes: int, max_count: int,
                max_freq: int = 30) -> tuple[PasswordDistribution, list[Fraction], list[int]]:
    n_cls = rng.randint(1, max_classes)
    freqs = sorted(rng.sample(range(1, max_freq + 1), n_cls), reverse=True)
    counts = [rng.randint(1, max_count) for _ in freqs]
    total = sum(f * c for f, c in zip(freqs, counts))
    dist = from_frequency_table(list(zip(freqs, counts)))
    return dist, [Fraction(f, total) for f in freqs], counts


def random_weights(rng: random.Random, m: int) -> list[Fraction]:
    raw = sorted((rng.randint(0, 12) for _ in range(m)), reverse=True)
    if raw[0] == 0:
        raw[0] = 1
    s = sum(raw)
    return [Fraction(r, s) for r in raw]


def random_instance(rng: random.Random, max_classes: int, max_count: int, max_m: int) -> Instance:
    dist, p, counts = random_dist(rng, max_classes, max_count)
    return Instance(dist, p, counts, random_weights(rng, rng.randint(1, max_m)))


def pair_probabilities(p, counts, weights) -> list:
    """Probability of every individual (password, runtime) pair."""
    return [pi * w for pi, n in zip(p, counts) for _ in range(n) for w in weights]


def exhaustive_best_response(p, counts, weights, v, k) -> tuple[int, Fraction, Fraction]:
    """Try every prefix of the expanded guess list; ties go to the longer prefix.

    Returns ``(threshold, cracked, utility)``.
    """
    pis = sorted(pair_probabilities(p, counts, weights), reverse=True)
    best = (0, Fraction(0), Fraction(0))
    success = Fraction(0)
    weighted = Fraction(0)
    for b, pi in enumerate(pis, start=1):
        success += pi
        weighted += b * pi
        utility = v * success - k * (weighted + b * (1 - success))
        if utility >= best[2]:
            best = (b, success, utility)
    return best


def direct_prefix_cost(pis, b, k):
    """``k * (sum_{i<=b} i * pi_i + b * (1 - S_b))`` straight from the definition."""
    head = pis[:b]
    return k * (sum((i + 1) * x for i, x in enumerate(head)) + b * (1 - sum(head)))


def spread_success(p, counts, weights, b) -> Fraction:
    """Success of ``b_i`` guesses per class, dealt round-robin over the class's passwords.

    Each password of class ``i`` is tried at runtimes 1, 2, ... in turn, so a
    password that receives ``g`` guesses is cracked with probability
    ``sum_{t <= g} w_t``.
    """
    total = Fraction(0)
    for pi, n, bi in zip(p, counts, b):
        per_password = [bi // n + (1 if j < bi % n else 0) for j in range(n)]
        for g in per_password:
            total += pi * sum(weights[:g], Fraction(0))
    return total


def allocations(counts, m, budget):
    """Every ``b`` with ``0 <= b_i <= m * n_i`` and ``sum(b) <= budget``."""
    ranges = [range(0, min(m * n, budget) + 1) for n in counts]
    for b in itertools.product(*ranges):
        if sum(b) <= budget:
            yield b


def exhaustive_allocation_max(p, counts, weights, budget) -> Fraction:
    return max(spread_success(p, counts, weights, b)
               for b in allocations(counts, len(weights), budget))


def top_pairs_success(password_probs: np.ndarray, weights: np.ndarray, budget: int) -> float:
    """Mass of the ``budget`` likeliest (password, runtime) pairs."""
    pis = np.sort(np.outer(password_probs, weights).ravel())[::-1]
    return float(pis[:budget].sum())


def monotone_grid(m: int, steps: int):
    """All nonincreasing weight vectors with entries in multiples of ``1 / steps``."""
    def parts(remaining, slots, cap):
        if slots == 1:
            if remaining <= cap:
                yield (remaining,)
            return
        for first in range(min(cap, remaining), -1, -1):
            if first * slots < remaining:
                break
            for rest in parts(remaining - first, slots - 1, first):
                yield (first,) + rest
    for combo in parts(steps, m, steps):
        yield np.array(combo, dtype=float) / steps


def grid_optimum(dist: PasswordDistribution, m: int, k: float, c_max: float, alpha: float,
                 budget: int, steps: int) -> float:
    """Least attacker success over cost-feasible grid distributions (inf if none)."""
    password_probs = np.repeat(dist.probabilities, dist.counts)
    runtimes = np.arange(1, m + 1)
    best = np.inf
    for w in monotone_grid(m, steps):
        cost = (1 - alpha) * k * m + alpha * k * float(runtimes @ w)
        if cost > c_max + 1e-12:
            continue
        best = min(best, top_pairs_success(password_probs, w, budget))
    return best


def vertex_enumeration(c, A_eq, b_eq, A_ub, b_ub, lower, upper):
    """Minimum of ``c . x`` over the bounded polytope by enumerating every basic point.

    Returns ``None`` when the polytope is empty.
    """
    n = len(c)
    A_eq = np.asarray(A_eq, dtype=float).reshape(-1, n)
    b_eq = np.asarray(b_eq, dtype=float)
    A_ub = np.asarray(A_ub, dtype=float).reshape(-1, n)
    b_ub = np.asarray(b_ub, dtype=float)
    # dependent equality rows would make every candidate basis singular
    basis_rows: list[int] = []
    for i in range(len(A_eq)):
        if np.linalg.matrix_rank(A_eq[basis_rows + [i]]) > len(basis_rows):
            basis_rows.append(i)
    eye = np.eye(n)
    ineq_rows = list(A_ub) + [eye[j] for j in range(n)] * 2
    ineq_rhs = list(b_ub) + list(lower) + list(upper)
    best = None
    for active in itertools.combinations(range(len(ineq_rows)), n - len(basis_rows)):
        M = np.array([A_eq[i] for i in basis_rows] + [ineq_rows[i] for i in active]).reshape(n, n)
        r = np.array([b_eq[i] for i in basis_rows] + [ineq_rhs[i] for i in active])
        if abs(np.linalg.det(M)) < 1e-9:
            continue
        x = np.linalg.solve(M, r)
        if len(A_eq) and np.abs(A_eq @ x - b_eq).max() > 1e-7:
            continue
        if len(A_ub) and (A_ub @ x - b_ub).max() > 1e-7:
            continue
        if (x < lower - 1e-7).any() or (x > upper + 1e-7).any():
            continue
        val = float(c @ x)
        if best is None or val < best:
            best = val
    return best
