"""CASH account records: a hidden runtime ``t`` hashed in but never stored.

Verifying a correct password stops after ``t`` evaluations of ``H^k``;
rejecting a wrong one always costs all ``m``.
"""

from __future__ import annotations

import bisect
import hashlib
import hmac
import random
import secrets
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Literal

import numpy as np

from .adversary import CashDistribution

DIGEST_SIZE = 32
DEFAULT_SALT_BITS = 128


class AccountExists(KeyError):
    pass


def _message(password: str, salt: bytes, t: int) -> bytes:
    return password.encode("utf-8") + b"\x00" + salt + b"\x00" + t.to_bytes(4, "big")


def hash_eval(password: str, salt: bytes, t: int, k_iter: int) -> bytes:
    """``H^k(password, salt, t)`` as ``k_iter`` chained SHA-256 applications.

    ``h_1 = D(M)`` and ``h_{j+1} = D(h_j || M)`` with
    ``M = utf8(password) || 0x00 || salt || 0x00 || t (4 bytes, big endian)``.
    """
    if t < 1 or k_iter < 1:
        raise ValueError("t and k_iter must be >= 1")
    msg = _message(password, salt, t)
    h = hashlib.sha256(msg).digest()
    for _ in range(k_iter - 1):
        h = hashlib.sha256(h + msg).digest()
    return h


def iterations_for_cost(k: float) -> int:
    """Integral iteration count for a real-valued hash cost."""
    return max(1, int(round(k)))


@dataclass(frozen=True)
class AccountRecord:
    username: str
    salt: bytes
    k_iter: int
    digest: bytes

    def to_line(self) -> str:
        return f"{self.username},{self.salt.hex()},{self.k_iter},{self.digest.hex()}"

    @classmethod
    def from_line(cls, line: str) -> "AccountRecord":
        user, salt, k_iter, digest = line.rstrip("\r\n").split(",")
        return cls(user, bytes.fromhex(salt), int(k_iter), bytes.fromhex(digest))


@dataclass(frozen=True)
class AuthResult:
    status: Literal["success", "failure", "unknown_user"]
    evals: int = 0
    t_found: int | None = None
    k_iter: int = 0

    @property
    def ok(self) -> bool:
        return self.status == "success"

    @property
    def base_hashes(self) -> int:
        """Base digest applications spent: ``evals * k_iter``."""
        return self.evals * self.k_iter


class RecordStore:
    """In-memory CASH record store; one writer, any number of readers."""

    def __init__(self, cash: CashDistribution):
        self.cash = cash
        self._records: dict[str, AccountRecord] = {}
        self._cdf = np.cumsum(cash.weights).tolist()
        self._last = int(np.flatnonzero(cash.weights > 0)[-1])
        self._lock = threading.Lock()

    @property
    def m(self) -> int:
        return self.cash.m

    def __len__(self) -> int:
        return len(self._records)

    def __contains__(self, username: str) -> bool:
        return username in self._records

    def __iter__(self) -> Iterator[AccountRecord]:
        return iter(list(self._records.values()))

    def get(self, username: str) -> AccountRecord | None:
        return self._records.get(username)

    def sample_runtime(self, rng: random.Random | None = None) -> int:
        u = (rng or secrets.SystemRandom()).random()
        return min(bisect.bisect_right(self._cdf, u), self._last) + 1

    def create_account(self, username: str, password: str, k_iter: int,
                       salt_bits: int = DEFAULT_SALT_BITS,
                       rng: random.Random | None = None) -> AccountRecord:
        if salt_bits % 8 or salt_bits <= 0:
            raise ValueError("salt length must be a positive multiple of 8 bits")
        if "," in username or "\n" in username or "\r" in username:
            raise ValueError("usernames may not contain commas or newlines")
        if k_iter < 1:
            raise ValueError("k_iter must be >= 1")
        salt = rng.randbytes(salt_bits // 8) if rng is not None else secrets.token_bytes(salt_bits // 8)
        t = self.sample_runtime(rng)
        record = AccountRecord(username, salt, k_iter, hash_eval(password, salt, t, k_iter))
        with self._lock:
            if username in self._records:
                raise AccountExists(username)
            self._records[username] = record
        return record

    def authenticate(self, username: str, guess: str) -> AuthResult:
        record = self._records.get(username)
        if record is None:
            return AuthResult("unknown_user")
        # weights are sorted, so index order is most-likely-first
        for t in range(1, self.m + 1):
            h = hash_eval(guess, record.salt, t, record.k_iter)
            if hmac.compare_digest(h, record.digest):
                return AuthResult("success", t, t, record.k_iter)
        return AuthResult("failure", self.m, None, record.k_iter)

    def dumps(self) -> str:
        return "".join(r.to_line() + "\n" for r in self._records.values())

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())

    @classmethod
    def load(cls, path: str | Path, cash: CashDistribution) -> "RecordStore":
        store = cls(cash)
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                if line.strip():
                    record = AccountRecord.from_line(line)
                    if record.username in store._records:
                        raise AccountExists(record.username)
                    store._records[record.username] = record
        return store
