"""Empirical password distributions compacted into equivalence classes.

A distribution is stored as pairs ``(p_i, n_i)``: ``n_i`` distinct passwords
each chosen by a fraction ``p_i`` of users.  Password strings are never kept,
only their frequencies.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

log = logging.getLogger(__name__)

MASS_TOLERANCE = 1e-9


class CorpusError(ValueError):
    """Malformed or empty frequency corpus."""

    def __init__(self, message: str, line_number: int | None = None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


@dataclass(frozen=True, eq=False)
class PasswordDistribution:
    probabilities: np.ndarray
    counts: np.ndarray
    total_users: int

    def __post_init__(self) -> None:
        p = np.array(self.probabilities, dtype=float)
        n = np.array(self.counts, dtype=np.int64)
        p.setflags(write=False)
        n.setflags(write=False)
        object.__setattr__(self, "probabilities", p)
        object.__setattr__(self, "counts", n)
        object.__setattr__(self, "total_users", int(self.total_users))

    @classmethod
    def from_classes(cls, classes: Iterable[tuple[float, int]],
                     total_users: int | None = None) -> "PasswordDistribution":
        classes = list(classes)
        p = [c[0] for c in classes]
        n = [c[1] for c in classes]
        if total_users is None:
            total_users = _infer_total_users(p)
        return cls(np.asarray(p, dtype=float), np.asarray(n, dtype=np.int64), total_users)

    @property
    def num_classes(self) -> int:
        return len(self.probabilities)

    @property
    def num_passwords(self) -> int:
        return int(self.counts.sum())

    @property
    def classes(self) -> list[tuple[float, int]]:
        return [(float(p), int(n)) for p, n in zip(self.probabilities, self.counts)]

    def frequencies(self) -> np.ndarray:
        """Users per password in each class (``p_i * N`` rounded)."""
        return np.rint(self.probabilities * self.total_users).astype(np.int64)

    def __len__(self) -> int:
        return self.num_classes

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PasswordDistribution):
            return NotImplemented
        return (self.total_users == other.total_users
                and np.array_equal(self.counts, other.counts)
                and np.array_equal(self.probabilities, other.probabilities))

    def __repr__(self) -> str:
        head = ", ".join(f"({p:.6g}, {n})" for p, n in self.classes[:4])
        more = ", ..." if self.num_classes > 4 else ""
        return (f"PasswordDistribution(N={self.total_users}, n={self.num_passwords}, "
                f"classes=[{head}{more}])")


def _infer_total_users(probabilities: list[float]) -> int:
    # Corpus-derived data almost always ends with the frequency-1 class.
    if not probabilities:
        return 1
    return max(1, int(round(1.0 / min(probabilities))))


def validate(dist: PasswordDistribution) -> str | None:
    """Return a description of the first violated invariant, or None if valid."""
    p, n = dist.probabilities, dist.counts
    if len(p) == 0:
        return "distribution has no classes"
    if len(p) != len(n):
        return "probability and count arrays differ in length"
    if np.any(~np.isfinite(p)) or np.any(p <= 0) or np.any(p > 1):
        return "probabilities must lie in (0, 1]"
    if np.any(n < 1):
        return "class counts must be >= 1"
    if np.any(np.diff(p) >= 0):
        return "probabilities not sorted strictly descending"
    mass = float(np.dot(p, n))
    if abs(mass - 1.0) > MASS_TOLERANCE:
        return f"mass {mass:.12g} != 1"
    if dist.total_users < 1:
        return "total users must be >= 1"
    return None


def from_frequency_table(table: dict[int, int] | Iterable[tuple[int, int]]) -> PasswordDistribution:
    """Build a distribution from ``frequency -> number of passwords`` pairs.

    Duplicate frequencies are merged; frequency ``f`` maps to ``p = f / N``.
    """
    merged: Counter[int] = Counter()
    items = table.items() if isinstance(table, dict) else table
    for f, c in items:
        merged[int(f)] += int(c)
    if not merged:
        raise CorpusError("empty corpus")
    freqs = np.array(sorted(merged, reverse=True), dtype=np.int64)
    counts = np.array([merged[f] for f in freqs], dtype=np.int64)
    total = int(np.dot(freqs, counts))
    return PasswordDistribution(freqs / total, counts, total)


def _records(lines: Iterable[str]) -> Iterator[tuple[int, str]]:
    for number, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        yield number, line


def ingest_frequency_corpus(lines: Iterable[str]) -> PasswordDistribution:
    """Parse ``"f c"`` records: ``c`` distinct passwords each used by ``f`` users."""
    table: list[tuple[int, int]] = []
    for number, line in _records(lines):
        parts = line.split()
        if len(parts) != 2:
            raise CorpusError(f"expected 'frequency count', got {line!r}", number)
        try:
            f, c = int(parts[0]), int(parts[1])
        except ValueError:
            raise CorpusError(f"non-integer field in {line!r}", number) from None
        if f < 1 or c < 1:
            raise CorpusError(f"frequency and count must be >= 1, got {line!r}", number)
        table.append((f, c))
    return from_frequency_table(table)


def ingest_plaintext(passwords: Iterable[str]) -> PasswordDistribution:
    """Histogram a leak-style list (one password per line) into classes."""
    per_password = Counter(line.rstrip("\r\n") for line in passwords)
    if not per_password:
        raise CorpusError("empty password list")
    return from_frequency_table(Counter(per_password.values()))


def frequency_lines(dist: PasswordDistribution) -> list[str]:
    """Serialize back to ``"f c"`` corpus records."""
    return [f"{f} {n}" for f, n in zip(dist.frequencies(), dist.counts)]


def write_distribution(dist: PasswordDistribution, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# total_users {dist.total_users}\n")
        fh.write(f"# total_passwords {dist.num_passwords}\n")
        fh.write(f"# classes {dist.num_classes}\n")
        for p, n in dist.classes:
            fh.write(f"{p:.17g} {n}\n")


def read_distribution(path: str | Path) -> PasswordDistribution:
    """Read a normalized ``"p_i n_i"`` class file written by :func:`write_distribution`."""
    total_users = None
    classes = []
    with open(path, encoding="utf-8") as fh:
        for number, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if len(parts) == 2 and parts[0] == "total_users":
                    total_users = int(parts[1])
                continue
            parts = line.split()
            if len(parts) != 2:
                raise CorpusError(f"expected 'probability count', got {line!r}", number)
            try:
                classes.append((float(parts[0]), int(parts[1])))
            except ValueError:
                raise CorpusError(f"bad field in {line!r}", number) from None
    if not classes:
        raise CorpusError(f"{path}: no classes")
    dist = PasswordDistribution.from_classes(classes, total_users)
    problem = validate(dist)
    if problem:
        raise CorpusError(f"{path}: {problem}")
    return dist


def load_corpus(path: str | Path, plaintext: bool = False) -> PasswordDistribution:
    with open(path, encoding="utf-8", errors="surrogateescape") as fh:
        dist = ingest_plaintext(fh) if plaintext else ingest_frequency_corpus(fh)
    log.info("loaded %s: %d classes, N=%d", path, dist.num_classes, dist.total_users)
    return dist
