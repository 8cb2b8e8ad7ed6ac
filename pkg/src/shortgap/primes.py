"""Segmented sieving, smallest-prime-factor queries and prime-pair scans.

Intervals are half-open on the left, ``(lo, hi]``, matching the ranges
``x - h < n <= x`` that every weighted sum in this package runs over.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

MAX_WORD = 2**63 - 1
DEFAULT_SEGMENT = 1 << 22
SPF_CAP = 10**7

THREADS_ENV = "SHORTGAP_THREADS"


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class Interval:
    """The integers ``lo < n <= hi``."""

    lo: int
    hi: int

    def __post_init__(self):
        lo, hi = int(self.lo), int(self.hi)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        if lo < 0:
            raise ValueError(f"interval lower endpoint must be >= 0, got {lo}")
        if hi < lo:
            raise ValueError(f"interval ({lo}, {hi}] has hi < lo")
        if hi > MAX_WORD:
            raise OverflowError(f"upper endpoint {hi} exceeds 2^63-1")

    def __len__(self) -> int:
        return self.hi - self.lo

    def split(self, size: int) -> list["Interval"]:
        """Partition into consecutive pieces of at most ``size`` integers."""
        if size < 1:
            raise ValueError("segment size must be positive")
        out = []
        lo = self.lo
        while lo < self.hi:
            hi = min(lo + size, self.hi)
            out.append(Interval(lo, hi))
            lo = hi
        return out


@dataclass(frozen=True, eq=False)
class PrimeSegment:
    """Primality flags for ``base + 1, ..., base + len(flags)``."""

    base: int
    flags: np.ndarray

    def __len__(self) -> int:
        return len(self.flags)

    def __eq__(self, other):
        if not isinstance(other, PrimeSegment):
            return NotImplemented
        return self.base == other.base and np.array_equal(self.flags, other.flags)

    def is_prime(self, n: int) -> bool:
        i = n - self.base - 1
        if not 0 <= i < len(self.flags):
            raise IndexError(f"{n} outside segment ({self.base}, {self.base + len(self.flags)}]")
        return bool(self.flags[i])

    def primes(self) -> np.ndarray:
        return np.flatnonzero(self.flags).astype(np.int64) + (self.base + 1)

    def count(self) -> int:
        return int(np.count_nonzero(self.flags))


def simple_sieve(limit: int) -> np.ndarray:
    """All primes ``<= limit`` by a plain (non-segmented) sieve."""
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    is_prime = np.ones(limit + 1, dtype=bool)
    is_prime[:2] = False
    is_prime[4::2] = False
    for p in range(3, math.isqrt(limit) + 1, 2):
        if is_prime[p]:
            is_prime[p * p :: 2 * p] = False
    return np.flatnonzero(is_prime).astype(np.int64)


@lru_cache(maxsize=8)
def _base_primes_cached(limit: int) -> np.ndarray:
    primes = simple_sieve(limit)
    primes.setflags(write=False)
    return primes


def base_primes(limit: int) -> np.ndarray:
    """Primes up to ``limit``; tables are cached at power-of-two sizes."""
    if limit < 2:
        return np.zeros(0, dtype=np.int64)
    size = 1 << max(10, (limit - 1).bit_length())
    primes = _base_primes_cached(size)
    return primes[: np.searchsorted(primes, limit, side="right")]


def _first_multiple_index(lo: int, p: int) -> int:
    """Index (0-based from lo+1) of the first multiple of p greater than lo."""
    return (-(lo + 1)) % p


def _sieve_block(lo: int, hi: int) -> np.ndarray:
    """Primality flags for (lo, hi]."""
    n = hi - lo
    flags = np.ones(n, dtype=bool)
    if n == 0:
        return flags
    if lo == 0:
        flags[0] = False  # n = 1
    for p in base_primes(math.isqrt(hi)):
        p = int(p)
        start = _first_multiple_index(lo, p)
        # p itself stays prime when it lies inside the block
        if lo + 1 + start == p:
            start += p
        flags[start::p] = False
    return flags


def sieve_interval(
    iv: Interval, segment_size: int = DEFAULT_SEGMENT, workers: int | None = None
) -> PrimeSegment:
    """Exact primality flags on ``iv``, sieved segment by segment."""
    pieces = iv.split(segment_size)
    if not pieces:
        return PrimeSegment(iv.lo, np.zeros(0, dtype=bool))
    workers = default_workers() if workers is None else workers
    if workers > 1 and len(pieces) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(lambda s: _sieve_block(s.lo, s.hi), pieces))
    else:
        blocks = [_sieve_block(s.lo, s.hi) for s in pieces]
    return PrimeSegment(iv.lo, np.concatenate(blocks))


def count_primes(
    iv: Interval, segment_size: int = DEFAULT_SEGMENT, workers: int | None = None
) -> int:
    """pi(hi) - pi(lo), without materialising flags for the whole range."""
    pieces = iv.split(segment_size)
    workers = default_workers() if workers is None else workers

    def one(s: Interval) -> int:
        return int(np.count_nonzero(_sieve_block(s.lo, s.hi)))

    if workers > 1 and len(pieces) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return sum(pool.map(one, pieces))
    return sum(one(s) for s in pieces)


def primes_in(iv: Interval, segment_size: int = DEFAULT_SEGMENT) -> np.ndarray:
    return sieve_interval(iv, segment_size).primes()


@lru_cache(maxsize=1)
def _spf_table(cap: int) -> np.ndarray:
    spf = np.zeros(cap + 1, dtype=np.int32)
    # Descending order: the last write at each index is its least prime factor.
    for p in base_primes(math.isqrt(cap))[::-1]:
        p = int(p)
        spf[p * p :: p] = p
    unset = spf == 0
    spf[unset] = np.arange(cap + 1, dtype=np.int32)[unset]
    spf.setflags(write=False)
    return spf


def smallest_prime_factor(n: int, cap: int = SPF_CAP) -> int:
    """The least prime dividing ``n`` (n > 1)."""
    n = int(n)
    if n <= 1:
        raise ValueError(f"smallest prime factor undefined for n={n}")
    if n <= cap:
        return int(_spf_table(cap)[n])
    if n % 2 == 0:
        return 2
    primes = base_primes(math.isqrt(n))
    chunk = 4096
    for i in range(0, len(primes), chunk):
        block = primes[i : i + chunk]
        hits = np.flatnonzero(n % block == 0)
        if hits.size:
            return int(block[hits[0]])
    return n


def psi(n: int, w: float) -> int:
    """1 when every prime factor of n exceeds w (so psi(1, w) = 1), else 0."""
    if n < 1:
        raise ValueError(f"psi requires n >= 1, got {n}")
    if n == 1:
        return 1
    return int(smallest_prime_factor(n) > w)


@dataclass(frozen=True, eq=False)
class FactorView:
    """Smallest prime factors over an interval, resolved up to ``bound``.

    ``spf[i]`` belongs to ``lo + 1 + i``.  A zero entry means n has no prime
    factor ``<= bound``; when ``bound >= isqrt(hi)`` such n are 1 or prime.
    """

    interval: Interval
    spf: np.ndarray
    bound: int

    @classmethod
    def build(cls, iv: Interval, bound: int | None = None) -> "FactorView":
        if bound is None:
            bound = math.isqrt(iv.hi)
        spf = np.zeros(len(iv), dtype=np.int64)
        for p in base_primes(bound)[::-1]:
            p = int(p)
            spf[_first_multiple_index(iv.lo, p) :: p] = p
        spf.setflags(write=False)
        return cls(iv, spf, int(bound))

    @property
    def complete(self) -> bool:
        return self.bound >= math.isqrt(self.interval.hi)

    def values(self) -> np.ndarray:
        return np.arange(self.interval.lo + 1, self.interval.hi + 1, dtype=np.int64)

    def least_factor(self) -> np.ndarray:
        """P^-(n) per entry with primes filled in; 0 for n = 1 and for n unresolved."""
        out = self.spf.copy()
        if self.complete:
            n = self.values()
            fill = (out == 0) & (n > 1)
            out[fill] = n[fill]
        return out

    def __getitem__(self, n: int) -> int:
        i = n - self.interval.lo - 1
        if not 0 <= i < len(self.spf):
            raise IndexError(n)
        p = int(self.spf[i])
        if p == 0 and self.complete and n > 1:
            return n
        return p


def factorize_interval(iv: Interval) -> list[tuple[int, ...]]:
    """Full prime factorisations (ascending, with multiplicity) for each n in iv."""
    n = len(iv)
    rem = np.arange(iv.lo + 1, iv.hi + 1, dtype=np.int64)
    idx_parts, prime_parts = [], []
    for p in base_primes(math.isqrt(iv.hi)):
        p = int(p)
        idx = np.arange(_first_multiple_index(iv.lo, p), n, p)
        while idx.size:
            rem[idx] //= p
            idx_parts.append(idx)
            prime_parts.append(np.full(idx.size, p, dtype=np.int64))
            idx = idx[rem[idx] % p == 0]
    big = np.flatnonzero(rem > 1)
    idx_parts.append(big)
    prime_parts.append(rem[big])
    if idx_parts:
        all_idx = np.concatenate(idx_parts)
        all_p = np.concatenate(prime_parts)
        order = np.lexsort((all_p, all_idx))
        all_idx, all_p = all_idx[order], all_p[order]
    else:
        all_idx = all_p = np.zeros(0, dtype=np.int64)
    bounds = np.searchsorted(all_idx, np.arange(n + 1))
    plist = all_p.tolist()
    return [tuple(plist[bounds[i] : bounds[i + 1]]) for i in range(n)]


def scan_gap_pairs(iv: Interval, d: int) -> list[tuple[int, int]]:
    """Consecutive primes p < p' inside iv with p' - p <= d."""
    if d < 1:
        raise ValueError("gap bound d must be >= 1")
    primes = primes_in(iv)
    if primes.size < 2:
        return []
    gaps = np.diff(primes)
    hit = np.flatnonzero(gaps <= d)
    return [(int(primes[i]), int(primes[i + 1])) for i in hit]
