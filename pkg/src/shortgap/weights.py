"""The y_r and lambda_d tables of the multidimensional sieve and the weight w(n).

Support vectors r = (r_1, ..., r_k) have squarefree, pairwise coprime entries,
all prime factors above D0 (so coprime to W) and prod r_i < R.  They are built
depth first: each prime in (D0, R) is either skipped or attached to one
coordinate, and a branch stops as soon as the running product reaches R.
"""

from __future__ import annotations

import logging
import math
import struct
from dataclasses import dataclass, field
from typing import Callable

import mpmath
import numpy as np

from .primes import base_primes
from .tuples import AdmissibleTuple, SieveContext
from .variational import SimplexPoly, SymmetricPoly, functional_values

log = logging.getLogger(__name__)

PRECISION_BITS = 96
R_CAP = 10**4
SUPPORT_CAP = 2_000_000

MAGIC = b"SGWT"
FORMAT_VERSION = 1

Vector = tuple[int, ...]


class SupportTooLarge(MemoryError):
    def __init__(self, R: float, estimate: int):
        super().__init__(f"support for R={R:g} has about {estimate} vectors (cap {SUPPORT_CAP})")
        self.R = R
        self.estimate = estimate


def _candidate_primes(W: int, R: float) -> list[int]:
    """Primes below R not dividing W."""
    top = max(1, math.ceil(R) - 1)
    return [int(p) for p in base_primes(top) if W % int(p) and p < R]


def iter_support(k: int, W: int, R: float):
    """Yield (r-vector, prime assignment) for every support vector.

    The assignment lists (p, coordinate) pairs, so callers can form divisors
    without refactoring.
    """
    primes = _candidate_primes(W, R)
    r = [1] * k
    chosen: list[tuple[int, int]] = []

    def rec(start: int, prod: int):
        yield tuple(r), tuple(chosen)
        for idx in range(start, len(primes)):
            p = primes[idx]
            if prod * p >= R:
                break
            for i in range(k):
                r[i] *= p
                chosen.append((p, i))
                yield from rec(idx + 1, prod * p)
                chosen.pop()
                r[i] //= p

    yield from rec(0, 1)


def support_size_estimate(k: int, W: int, R: float) -> int:
    """Exact count of support vectors: sum over squarefree q < R coprime to W of k^omega(q)."""
    primes = _candidate_primes(W, R)

    def rec(start: int, prod: int) -> int:
        total = 1
        for idx in range(start, len(primes)):
            p = primes[idx]
            if prod * p >= R:
                break
            total += k * rec(idx + 1, prod * p)
            if total > SUPPORT_CAP:
                return total
        return total

    return rec(0, 1)


def _check_budget(k: int, W: int, R: float, r_cap: float | None):
    if R <= 1:
        raise ValueError("R must exceed 1")
    cap = R_CAP if r_cap is None else r_cap
    if R > cap:
        est = support_size_estimate(k, W, R)
        raise SupportTooLarge(R, est)
    est = support_size_estimate(k, W, R)
    if est > SUPPORT_CAP:
        raise SupportTooLarge(R, est)


@dataclass(frozen=True, eq=False)
class YTable:
    """y_r = F(log r_1 / log R, ..., log r_k / log R) on the support."""

    k: int
    W: int
    R: float
    entries: dict[Vector, mpmath.mpf] = field(repr=False)
    factors: dict[Vector, tuple[tuple[int, int], ...]] = field(repr=False)
    functionals: tuple[float, tuple[float, ...]] | None = None

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, r: Vector) -> mpmath.mpf:
        return self.entries.get(tuple(r), mpmath.mpf(0))

    def max_abs(self) -> float:
        return float(max((abs(v) for v in self.entries.values()), default=0))


def build_y_from(F: Callable, k: int, W: int, R: float, r_cap: float | None = None) -> YTable:
    """Evaluate F at log-ratio points of every support vector (``PRECISION_BITS`` bits)."""
    _check_budget(k, W, R, r_cap)
    entries, factors = {}, {}
    with mpmath.workprec(PRECISION_BITS):
        logR = mpmath.log(mpmath.mpf(R))
        for r, assign in iter_support(k, W, R):
            pt = tuple(mpmath.log(v) / logR for v in r)
            entries[r] = mpmath.mpf(F(pt))
            factors[r] = assign
    log.debug("y table: %d support vectors (k=%d, R=%g)", len(entries), k, R)
    return YTable(k, W, float(R), entries, factors, _functionals_of(F))


def _functionals_of(F) -> tuple[float, tuple[float, ...]] | None:
    """(I_k(F), J_k^(m)(F) for each m) when F is one of the exact polynomial types."""
    if isinstance(F, (SimplexPoly, SymmetricPoly)):
        I_val, J_vals = functional_values(F)
        return float(I_val), tuple(float(v) for v in J_vals)
    return None


def build_y(F: Callable, ctx: SieveContext, r_cap: float | None = None) -> YTable:
    if getattr(F, "k", ctx.k) != ctx.k:
        raise ValueError(f"F has dimension {F.k}, context has k={ctx.k}")
    return build_y_from(F, ctx.k, ctx.W, ctx.R, r_cap)


@dataclass(frozen=True, eq=False)
class WeightTable:
    """lambda_d on the support; vectors are stored sorted for deterministic output.

    ``functionals`` carries (I_k(F), J_k^(m)(F)) of the generating F for the
    main-term formulas, when known.
    """

    k: int
    W: int
    R: float
    entries: dict[Vector, mpmath.mpf] = field(repr=False)
    functionals: tuple[float, tuple[float, ...]] | None = None

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, d: Vector) -> float:
        return float(self.entries.get(tuple(d), 0))

    @property
    def lambda_max(self) -> float:
        return float(max((abs(v) for v in self.entries.values()), default=0))

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """(vectors as an (N, k) int64 array, values as float64), sorted by vector."""
        keys = sorted(self.entries)
        vec = np.array(keys, dtype=np.int64).reshape(len(keys), self.k)
        val = np.array([float(self.entries[d]) for d in keys], dtype=np.float64)
        return vec, val

    def nonzero(self) -> dict[Vector, float]:
        return {d: float(v) for d, v in self.entries.items() if v != 0}

    def check_support(self) -> None:
        for d, v in self.entries.items():
            if v == 0:
                continue
            q = math.prod(d)
            if not q < self.R:
                raise AssertionError(f"lambda_{d} nonzero with prod {q} >= R")
            if math.gcd(q, self.W) != 1:
                raise AssertionError(f"lambda_{d} nonzero but prod shares a factor with W")
            if not _squarefree(q):
                raise AssertionError(f"lambda_{d} nonzero on non-squarefree product")

    # -- binary persistence ------------------------------------------------

    def to_bytes(self) -> bytes:
        vec, val = self.arrays()
        wb = self.W.to_bytes(max(1, (self.W.bit_length() + 7) // 8), "big")
        head = MAGIC + struct.pack("<HHd", FORMAT_VERSION, self.k, self.R)
        head += struct.pack("<I", len(wb)) + wb
        if self.functionals is None:
            head += struct.pack("<B", 0)
        else:
            I_val, J_vals = self.functionals
            head += struct.pack(f"<Bd{self.k}d", 1, I_val, *J_vals)
        head += struct.pack("<Q", len(val))
        body = b"".join(
            struct.pack(f"<{self.k}Qd", *(int(x) for x in row), float(v)) for row, v in zip(vec, val)
        )
        return head + body

    @classmethod
    def from_bytes(cls, data: bytes) -> "WeightTable":
        if data[:4] != MAGIC:
            raise ValueError("not a weight table file")
        version, k, R = struct.unpack_from("<HHd", data, 4)
        if version != FORMAT_VERSION:
            raise ValueError(f"unsupported weight table version {version}")
        off = 4 + struct.calcsize("<HHd")
        (wlen,) = struct.unpack_from("<I", data, off)
        off += 4
        W = int.from_bytes(data[off : off + wlen], "big")
        off += wlen
        (flag,) = struct.unpack_from("<B", data, off)
        off += 1
        functionals = None
        if flag:
            I_val, *J_vals = struct.unpack_from(f"<d{k}d", data, off)
            off += 8 * (k + 1)
            functionals = (I_val, tuple(J_vals))
        (count,) = struct.unpack_from("<Q", data, off)
        off += 8
        rec = struct.Struct(f"<{k}Qd")
        entries = {}
        for _ in range(count):
            *d, v = rec.unpack_from(data, off)
            off += rec.size
            entries[tuple(d)] = mpmath.mpf(v)
        return cls(k, W, R, entries, functionals)

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def load(cls, path) -> "WeightTable":
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())


def _squarefree(q: int) -> bool:
    p = 2
    while p * p <= q:
        if q % (p * p) == 0:
            return False
        p += 1 if p == 2 else 2
    return True


def _divisor_vectors(k: int, assign: tuple[tuple[int, int], ...]):
    """All d with d_i | r_i, given r's prime-to-coordinate assignment, with prod mu(d_i) d_i."""
    out = [((1,) * k, 1)]
    for p, i in assign:
        extra = []
        for d, signed in out:
            dd = list(d)
            dd[i] *= p
            extra.append((tuple(dd), -signed * p))
        out.extend(extra)
    return out


def build_lambda(y: YTable) -> WeightTable:
    """lambda_d = prod(mu(d_i) d_i) * sum over r with d_i | r_i of y_r / prod phi(r_i)."""
    acc: dict[Vector, mpmath.mpf] = {}
    with mpmath.workprec(PRECISION_BITS):
        for r, yr in y.entries.items():
            if yr == 0:
                continue
            assign = y.factors[r]
            term = yr / math.prod(p - 1 for p, _ in assign)
            for d, _ in _divisor_vectors(y.k, assign):
                acc[d] = acc.get(d, mpmath.mpf(0)) + term
        entries = {}
        for d in y.entries:
            s = acc.get(d)
            if s is None:
                entries[d] = mpmath.mpf(0)
                continue
            signed = 1
            for p, _ in y.factors[d]:
                signed *= -p
            entries[d] = signed * s
    table = WeightTable(y.k, y.W, y.R, entries, y.functionals)
    log.info(
        "lambda table: %d entries, lambda_max=%.6g, y_max*(log R)^k=%.6g",
        len(table), table.lambda_max, y.max_abs() * math.log(y.R) ** y.k,
    )
    return table


def y_from_lambda(lam: WeightTable) -> dict[Vector, float]:
    """Invert: y_r = prod(mu(r_i) phi(r_i)) * sum over d with r_i | d_i of lambda_d / prod d_i."""
    out = {}
    keys = list(lam.entries)
    for r in keys:
        acc = mpmath.mpf(0)
        with mpmath.workprec(PRECISION_BITS):
            for d in keys:
                if all(di % ri == 0 for di, ri in zip(d, r)):
                    acc += lam.entries[d] / math.prod(d)
            q = math.prod(r)
            coef = 1
            for p in _prime_list(q):
                coef *= -(p - 1)
            out[r] = float(coef * acc)
    return out


def _prime_list(q: int) -> list[int]:
    out, p = [], 2
    while p * p <= q:
        if q % p == 0:
            out.append(p)
            q //= p
        else:
            p += 1
    if q > 1:
        out.append(q)
    return out


def weight(n: int, t: AdmissibleTuple, lam: WeightTable) -> float:
    """w(n) = (sum of lambda_d over d with d_i | L_i(n) for all i)^2."""
    if n < 1:
        raise ValueError("weight requires n >= 1")
    if t.k != lam.k:
        raise ValueError("tuple and table dimensions differ")
    vals = t.values(n)
    s = mpmath.mpf(0)
    for d, v in lam.entries.items():
        if v and all(L % di == 0 for L, di in zip(vals, d)):
            s += v
    return float(s * s)
