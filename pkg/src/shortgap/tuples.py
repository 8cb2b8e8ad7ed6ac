"""Admissible sets of linear forms and the parameter context shared by all sums."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import NamedTuple

import numpy as np

from .primes import base_primes

DEFAULT_BETA = Fraction(94, 100)
DEFAULT_EPS = Fraction(1, 1000)
DEFAULT_EPS0 = Fraction(1, 1000)


def as_fraction(value) -> Fraction:
    """Exact rational from an int, Fraction, decimal string or float literal.

    Floats go through ``repr`` so that ``0.94`` means 94/100, not the nearest
    binary double.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite value {value}")
        return Fraction(repr(value))
    return Fraction(str(value).strip())


def as_integer(value) -> int:
    q = as_fraction(value)
    if q.denominator != 1:
        raise ValueError(f"{value} is not an integer")
    return q.numerator


def iroot_floor(n: int, k: int) -> int:
    """floor(n ** (1/k)) for integers n >= 0, k >= 1."""
    if n < 0 or k < 1:
        raise ValueError("iroot_floor needs n >= 0 and k >= 1")
    if n < 2 or k == 1:
        return n
    r = int(math.exp(math.log(n) / k)) if n.bit_length() < 1000 else 1 << (n.bit_length() // k)
    while r**k > n:
        r -= 1
    while (r + 1) ** k <= n:
        r += 1
    return r


def rational_power_floor(x: int, e: Fraction) -> int:
    """floor(x ** e) for a nonnegative rational exponent, exactly."""
    return iroot_floor(x**e.numerator, e.denominator)


def rational_power_ceil(x: int, e: Fraction) -> int:
    f = rational_power_floor(x, e)
    return f if f**e.denominator == x**e.numerator else f + 1


@dataclass(frozen=True, order=True)
class LinearForm:
    """L(n) = a n + h with a >= 1 and gcd(a, h) = 1."""

    a: int
    h: int

    def __post_init__(self):
        if self.a < 1:
            raise ValueError(f"slope must be positive, got {self.a}")
        if math.gcd(self.a, self.h) != 1:
            raise ValueError(f"form {self.a}n+{self.h} has gcd(a, h) = {math.gcd(self.a, self.h)}")

    def __call__(self, n):
        return self.a * n + self.h

    def __str__(self):
        return f"{self.a}n{self.h:+d}"


@dataclass(frozen=True)
class AdmissibleTuple:
    """An ordered list of k distinct linear forms."""

    forms: tuple[LinearForm, ...]

    def __post_init__(self):
        forms = tuple(self.forms)
        object.__setattr__(self, "forms", forms)
        if not forms:
            raise ValueError("a tuple needs at least one form")
        if len(set(forms)) != len(forms):
            raise ValueError("duplicate forms in tuple")

    @classmethod
    def from_offsets(cls, offsets, slopes=None) -> "AdmissibleTuple":
        offsets = [int(h) for h in offsets]
        slopes = [1] * len(offsets) if slopes is None else [int(a) for a in slopes]
        if len(slopes) != len(offsets):
            raise ValueError("slopes and offsets differ in length")
        return cls(tuple(LinearForm(a, h) for a, h in zip(slopes, offsets)))

    @property
    def k(self) -> int:
        return len(self.forms)

    @property
    def slopes(self) -> tuple[int, ...]:
        return tuple(f.a for f in self.forms)

    @property
    def offsets(self) -> tuple[int, ...]:
        return tuple(f.h for f in self.forms)

    def values(self, n):
        return [f(n) for f in self.forms]

    def to_dict(self) -> dict:
        return {"slopes": list(self.slopes), "offsets": list(self.offsets)}

    @classmethod
    def from_dict(cls, d: dict) -> "AdmissibleTuple":
        return cls.from_offsets(d["offsets"], d.get("slopes"))


@dataclass(frozen=True)
class AdmissibilityCertificate:
    admissible: bool
    witnesses: dict[int, int] = field(default_factory=dict)
    blocking_prime: int | None = None


def _covered_residues(t: AdmissibleTuple, p: int) -> set[int]:
    """Residues n mod p with p | L_i(n) for some i."""
    out = set()
    for f in t.forms:
        if f.a % p:
            out.add((-f.h * pow(f.a, -1, p)) % p)
    return out


def is_admissible(t: AdmissibleTuple) -> tuple[bool, AdmissibilityCertificate]:
    """Check every prime p <= k; larger primes cannot be covered by k forms."""
    witnesses = {}
    for p in base_primes(t.k):
        p = int(p)
        covered = _covered_residues(t, p)
        free = next((n for n in range(p) if n not in covered), None)
        if free is None:
            return False, AdmissibilityCertificate(False, witnesses, p)
        witnesses[p] = free
    return True, AdmissibilityCertificate(True, witnesses)


def make_prime_tuple(k: int) -> AdmissibleTuple:
    """Offsets are the first k primes larger than k, all slopes 1."""
    if k < 1:
        raise ValueError("k must be >= 1")
    limit = max(16, 2 * k)
    while True:
        primes = base_primes(limit)
        primes = primes[primes > k]
        if len(primes) >= k:
            return AdmissibleTuple.from_offsets(primes[:k].tolist())
        limit *= 2


def d0_bound(t: AdmissibleTuple) -> int:
    """max(|a_j h_i - a_i h_j|, h_i, a_i) over the forms."""
    cross = [
        abs(fj.a * fi.h - fi.a * fj.h)
        for i, fi in enumerate(t.forms)
        for fj in t.forms[i + 1 :]
    ]
    return max(cross + [f.h for f in t.forms] + [f.a for f in t.forms])


def pick_D0(t: AdmissibleTuple, floor: int | None = None) -> int:
    """Smallest D0 above the coprimality bound, raised to ``floor`` (default k)."""
    floor = t.k if floor is None else floor
    return max(int(floor), d0_bound(t) + 1)


def compute_W(D0: int) -> int:
    """Product of the primes p <= D0."""
    if D0 < 0:
        raise ValueError("D0 must be >= 0")
    return math.prod(int(p) for p in base_primes(D0))


class NoResidueError(ValueError):
    def __init__(self, prime: int):
        super().__init__(f"every residue mod {prime} makes some form divisible by {prime}")
        self.prime = prime


SCAN_LIMIT = 10**7


def find_v0(t: AdmissibleTuple, W: int) -> int:
    """Smallest v in [0, W) with gcd(L_i(v), W) = 1 for every form.

    Moduli above ``SCAN_LIMIT`` fall back to CRT over the least allowed
    residue per prime factor of W; that residue is valid but not necessarily
    the smallest.
    """
    if W < 1:
        raise ValueError("W must be positive")
    if W == 1:
        return 0
    primes = _prime_factors_small_primorial(W)
    allowed = {}
    for p in primes:
        covered = _covered_residues(t, p)
        free = [n for n in range(p) if n not in covered]
        if not free:
            raise NoResidueError(p)
        allowed[p] = free
    if W <= SCAN_LIMIT:
        masks = {}
        for p in primes:
            masks[p] = np.zeros(p, dtype=bool)
            masks[p][allowed[p]] = True
        for start in range(0, W, 1 << 20):
            v = np.arange(start, min(W, start + (1 << 20)), dtype=np.int64)
            ok = np.ones(v.size, dtype=bool)
            for p in primes:
                ok &= masks[p][v % p]
            hits = np.flatnonzero(ok)
            if hits.size:
                return int(v[hits[0]])
    v, mod = 0, 1
    for p in primes:
        r = allowed[p][0]
        # solve v' = v (mod mod), v' = r (mod p)
        step = ((r - v) * pow(mod, -1, p)) % p
        v, mod = v + mod * step, mod * p
    return v % W


def _prime_factors_small_primorial(W: int) -> list[int]:
    out = []
    rem = W
    p = 2
    while rem > 1:
        if rem % p == 0:
            out.append(p)
            rem //= p
            if rem % p == 0:
                raise ValueError("W must be squarefree (a primorial)")
        p += 1 if p == 2 else 2
    return out


class SingularSeries(NamedTuple):
    value: float
    admissible: bool
    cutoff: int


def covered_counts(t: AdmissibleTuple, primes: np.ndarray) -> np.ndarray:
    """nu_p = #{n mod p : p | prod L_i(n)} for each prime, via the root of each form."""
    primes = np.asarray(primes, dtype=np.int64)
    roots = np.empty((t.k, primes.size), dtype=np.int64)
    for i, f in enumerate(t.forms):
        if f.a == 1:
            roots[i] = (-f.h) % primes
        else:
            roots[i] = [
                (-f.h * pow(f.a, -1, int(p))) % int(p) if f.a % int(p) else -1 for p in primes
            ]
    roots.sort(axis=0)
    distinct = (roots[0] >= 0).astype(np.int64)
    distinct += np.count_nonzero((np.diff(roots, axis=0) != 0) & (roots[1:] >= 0), axis=0)
    return distinct


def singular_series(t: AdmissibleTuple, cutoff: int) -> SingularSeries:
    """Truncated Euler product prod_{p<=cutoff} (1 - nu_p/p)(1 - 1/p)^(-k)."""
    if cutoff < t.k:
        raise ValueError(f"cutoff {cutoff} must be >= k = {t.k}")
    primes = base_primes(cutoff)
    nu = covered_counts(t, primes)
    if np.any(nu >= primes):
        return SingularSeries(0.0, False, cutoff)
    p = primes.astype(np.float64)
    logs = np.log1p(-nu / p) - t.k * np.log1p(-1.0 / p)
    return SingularSeries(float(math.exp(math.fsum(logs.tolist()))), True, cutoff)


@dataclass(frozen=True)
class SieveContext:
    """Every scalar parameter threading through the weights and sums."""

    x: int
    h: int
    delta: Fraction
    theta: Fraction
    eps: Fraction
    eps0: Fraction
    k: int
    D0: int
    W: int
    v0: int
    R: float
    beta: Fraction
    c1: Fraction
    forms: AdmissibleTuple

    def __post_init__(self):
        if self.forms.k != self.k:
            raise ValueError("k does not match the number of forms")
        if not Fraction(525, 1000) <= self.delta <= 1:
            raise ValueError(f"delta={self.delta} outside [0.525, 1]")
        if self.theta < 0:
            raise ValueError("theta must be >= 0")
        if self.beta >= 1:
            raise ValueError("beta must be < 1")
        if self.W != compute_W(self.D0):
            raise ValueError("W is not the primorial of D0")
        if not 0 <= self.v0 < self.W:
            raise ValueError("v0 must lie in [0, W)")
        for f in self.forms.forms:
            if math.gcd(f(self.v0), self.W) != 1:
                raise ValueError(f"L({self.v0}) = {f(self.v0)} shares a factor with W")
        if self.h < rational_power_ceil(self.x, self.delta):
            raise ValueError(f"h={self.h} is below x^delta")
        if self.h > self.x:
            raise ValueError("h must not exceed x")

    @property
    def interval(self):
        from .primes import Interval

        return Interval(self.x - self.h, self.x)

    @property
    def log_R(self) -> float:
        return math.log(self.R)

    def to_dict(self) -> dict:
        return {
            "x": self.x,
            "h": self.h,
            "delta": str(self.delta),
            "theta": str(self.theta),
            "eps": str(self.eps),
            "eps0": str(self.eps0),
            "k": self.k,
            "D0": self.D0,
            "W": self.W,
            "v0": self.v0,
            "R": self.R,
            "beta": str(self.beta),
            "c1": str(self.c1),
            "tuple": self.forms.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SieveContext":
        return cls(
            x=int(d["x"]),
            h=int(d["h"]),
            delta=Fraction(d["delta"]),
            theta=Fraction(d["theta"]),
            eps=Fraction(d["eps"]),
            eps0=Fraction(d["eps0"]),
            k=int(d["k"]),
            D0=int(d["D0"]),
            W=int(d["W"]),
            v0=int(d["v0"]),
            R=float(d["R"]),
            beta=Fraction(d["beta"]),
            c1=Fraction(d["c1"]),
            forms=AdmissibleTuple.from_dict(d["tuple"]),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def load(cls, path) -> "SieveContext":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def default_c1(eps: Fraction, theta: Fraction) -> Fraction:
    """Half of eps * log R / log x, inside the admissible range of the S_1^- bound."""
    return Fraction(1, 2) * eps * (theta / 2 - eps)


def make_context(
    x,
    delta,
    theta,
    eps=DEFAULT_EPS,
    *,
    forms: AdmissibleTuple | None = None,
    k: int | None = None,
    d0_floor: int | None = None,
    eps0=DEFAULT_EPS0,
    beta=DEFAULT_BETA,
    c1=None,
    h: int | None = None,
    R: float | None = None,
) -> SieveContext:
    """Assemble a consistent context with R = x^(theta/2 - eps).

    Passing ``R`` instead keeps that R verbatim and derives theta from it
    (rounded to a rational with denominator <= 10^9), so the relation holds
    to ~1e-9.
    """
    x = as_integer(x)
    delta, eps = as_fraction(delta), as_fraction(eps)
    R_given = R
    if R is not None:
        theta = Fraction(2 * (math.log(R) / math.log(x)) + 2 * float(eps)).limit_denominator(10**9)
    theta = as_fraction(theta)
    eps0, beta = as_fraction(eps0), as_fraction(beta)
    if forms is None:
        forms = make_prime_tuple(k if k is not None else 2)
    ok, cert = is_admissible(forms)
    if not ok:
        raise ValueError(f"tuple is not admissible: covered at p={cert.blocking_prime}")
    D0 = pick_D0(forms, d0_floor)
    W = compute_W(D0)
    v0 = find_v0(forms, W)
    if h is None:
        h = rational_power_ceil(x, delta)
    R = float(R_given) if R_given is not None else float(x) ** float(theta / 2 - eps)
    c1 = default_c1(eps, theta) if c1 is None else as_fraction(c1)
    return SieveContext(
        x=x, h=int(h), delta=delta, theta=theta, eps=eps, eps0=eps0, k=forms.k,
        D0=D0, W=W, v0=v0, R=float(R), beta=beta, c1=c1, forms=forms,
    )
