"""Rational offline-attacker best responses.

The attacker knows the password distribution and the defender's runtime
distribution, guesses ``(password, t)`` pairs in decreasing order of
probability, and stops at the threshold maximizing expected reward minus
expected guessing cost.  Costs are in units of one base hash evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .distribution import PasswordDistribution

CASH_TOLERANCE = 1e-9
# Relative tolerance under which two thresholds count as equally good.
TIE_RTOL = 1e-12


class CashDistributionError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class CashDistribution:
    """Defender's distribution over the hidden runtime parameter ``t = 1..m``.

    ``weights[j]`` is the probability that ``t = j + 1``; weights are
    nonincreasing so index order is likelihood order.
    """

    weights: np.ndarray

    def __post_init__(self) -> None:
        w = np.array(self.weights, dtype=float).ravel()
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        problem = self.violation()
        if problem:
            raise CashDistributionError(problem)

    def violation(self) -> str | None:
        w = self.weights
        if len(w) == 0:
            return "empty CASH distribution"
        if not np.all(np.isfinite(w)):
            return "non-finite weight"
        if w.min() < -CASH_TOLERANCE or w.max() > 1 + CASH_TOLERANCE:
            return "weights must lie in [0, 1]"
        if np.any(np.diff(w) > CASH_TOLERANCE):
            return "weights must be nonincreasing"
        if abs(w.sum() - 1.0) > CASH_TOLERANCE:
            return f"weights sum to {w.sum():.12g}, not 1"
        return None

    @classmethod
    def uniform(cls, m: int) -> "CashDistribution":
        return cls(np.full(m, 1.0 / m))

    @classmethod
    def clean(cls, weights: Sequence[float]) -> "CashDistribution":
        """Project LP output (tiny negative/non-monotone noise) onto a valid distribution."""
        w = np.clip(np.asarray(weights, dtype=float), 0.0, None)
        w = np.minimum.accumulate(w)
        return cls(w / w.sum())

    @property
    def m(self) -> int:
        return len(self.weights)

    def expected_runtime(self) -> float:
        """``sum_j j * p~_j``: mean probes to verify a correct password."""
        return float(np.dot(np.arange(1, self.m + 1), self.weights))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CashDistribution):
            return NotImplemented
        return np.array_equal(self.weights, other.weights)

    def __repr__(self) -> str:
        return f"CashDistribution(m={self.m}, weights={np.round(self.weights, 6).tolist()})"


@dataclass(frozen=True)
class ServerParams:
    k: float
    alpha: float
    c_max: float
    m: int

    def __post_init__(self) -> None:
        if self.k <= 0 or self.c_max <= 0 or self.m < 1:
            raise ValueError("k and c_max must be positive and m >= 1")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if self.k > self.c_max:
            raise ValueError(f"hash cost k={self.k} exceeds c_max={self.c_max}")
        if (1 - self.alpha) * self.m * self.k > self.c_max:
            raise ValueError("(1 - alpha) * m * k exceeds c_max; no CASH distribution is feasible")


@dataclass(frozen=True)
class AdversaryModel:
    value: float
    believed_value: float

    def __post_init__(self) -> None:
        if self.value < 0 or self.believed_value < 0:
            raise ValueError("adversary values must be nonnegative")


@dataclass(frozen=True, eq=False)
class TupleSchedule:
    """Grouped ``(password class, runtime)`` guesses sorted by probability.

    Entry ``e`` stands for ``counts[e]`` equally likely guesses of probability
    ``pi[e]``, all for class ``class_index[e]`` (0-based) at runtime
    ``runtime_index[e]`` (0-based).  Ties are ordered by class, then runtime.
    """

    class_index: np.ndarray
    runtime_index: np.ndarray
    pi: np.ndarray
    counts: np.ndarray

    def __len__(self) -> int:
        return len(self.pi)

    def entries(self) -> list[tuple[int, float, int]]:
        """``(class, pi, count)`` triples with 1-based class numbers."""
        return [(int(i) + 1, float(p), int(c))
                for i, p, c in zip(self.class_index, self.pi, self.counts)]

    @property
    def total_mass(self) -> float:
        return float(np.dot(self.pi, self.counts))


@dataclass(frozen=True)
class BestResponse:
    threshold: int
    cracked: float
    utility: float


def tuple_schedule(dist: PasswordDistribution, cash: CashDistribution) -> TupleSchedule:
    return schedule_from_weights(dist, cash.weights)


def schedule_from_weights(dist: PasswordDistribution, weights: np.ndarray) -> TupleSchedule:
    """Schedule for raw runtime weights, which need not form a valid distribution."""
    p = dist.probabilities
    w = np.asarray(weights, dtype=float)
    n_cls, m = len(p), len(w)
    cls = np.repeat(np.arange(n_cls), m)
    run = np.tile(np.arange(m), n_cls)
    pi = np.outer(p, w).ravel()
    order = np.lexsort((run, cls, -pi))
    return TupleSchedule(cls[order], run[order], pi[order], dist.counts[cls[order]])


def _best_prefix(utility: np.ndarray, scale: float) -> int:
    """Index of the best cumulative utility, ``utility[0]`` being the empty prefix.

    Near-ties resolve toward the larger threshold.
    """
    best = utility.max()
    tol = TIE_RTOL * max(1.0, scale)
    return int(np.flatnonzero(utility >= best - tol)[-1])


def _grouped_best_response(pi: np.ndarray, counts: np.ndarray, v: float, k: float) -> BestResponse:
    c = counts.astype(float)
    mass = pi * c
    success = np.cumsum(mass)
    # Marginal cost of a group uses the success mass *including* that group:
    # the attacker pays all c guesses unless the answer was found earlier
    # (prob 1 - success) and (c + 1) / 2 on average if it lies in the group.
    d_cost = k * (c * (1.0 - success) + (pi * c * c + pi * c) / 2.0)
    utility = np.concatenate(([0.0], np.cumsum(v * mass - d_cost)))
    idx = _best_prefix(utility, max(v, k))
    if idx == 0:
        return BestResponse(0, 0.0, 0.0)
    return BestResponse(int(counts[:idx].sum()), float(min(1.0, success[idx - 1])),
                        float(utility[idx]))


def cash_best_response(dist: PasswordDistribution, cash: CashDistribution,
                       v: float, k: float) -> BestResponse:
    """Utility-maximizing threshold of a value-``v`` attacker against CASH with hash cost ``k``."""
    if k <= 0:
        raise ValueError("hash cost k must be positive")
    if v < 0:
        raise ValueError("adversary value must be nonnegative")
    sched = tuple_schedule(dist, cash)
    return _grouped_best_response(sched.pi, sched.counts, v, k)


def deterministic_best_response(dist: PasswordDistribution, v: float, k: float) -> BestResponse:
    """Best response against plain key stretching: guess passwords in order, each costing ``k``."""
    if k <= 0:
        raise ValueError("hash cost k must be positive")
    if v < 0:
        raise ValueError("adversary value must be nonnegative")
    p = dist.probabilities
    n = dist.counts.astype(float)
    utilities = [0.0]
    successes = [0.0]
    guessed = [0]
    success = 0.0
    utility = 0.0
    # Utility within a class is convex in the number of its passwords tried,
    # so only class boundaries can be maxima.
    for pi, ni in zip(p, n):
        # ni more guesses for every account not yet cracked and not in this
        # class; the j-th password of the class is found after j of them.
        cost = k * (ni * (1.0 - success - pi * ni) + pi * ni * (ni + 1) / 2.0)
        utility += v * pi * ni - cost
        success += pi * ni
        utilities.append(utility)
        successes.append(success)
        guessed.append(guessed[-1] + int(ni))
    idx = _best_prefix(np.asarray(utilities), max(v, k))
    return BestResponse(guessed[idx], min(1.0, successes[idx]), utilities[idx])


def uniform_cash_hash_cost(c_max: float, m: int, alpha: float) -> float:
    """Largest ``k`` keeping uniform CASH within the amortized cost ``c_max``."""
    if m < 1 or c_max <= 0 or not 0.0 <= alpha <= 1.0:
        raise ValueError("need m >= 1, c_max > 0, alpha in [0, 1]")
    return c_max / ((1 - alpha) * m + alpha * (m + 1) / 2.0)


def uniform_success_rate(dist: PasswordDistribution, v: float, c_max: float,
                         m: int, alpha: float) -> BestResponse:
    k = uniform_cash_hash_cost(c_max, m, alpha)
    return cash_best_response(dist, CashDistribution.uniform(m), v, k)


def prefix_cost(pi: Sequence[float], threshold: int, k: float) -> float:
    """Expected guessing cost of trying the first ``threshold`` of the sorted guesses ``pi``."""
    pi = np.asarray(pi, dtype=float)
    head = pi[:threshold]
    return k * (float(np.dot(np.arange(1, threshold + 1), head))
                + threshold * (1.0 - float(head.sum())))
