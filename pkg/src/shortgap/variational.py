"""Exact simplex integrals, the I_k / J_k^(m) functionals and lower bounds for M_k.

The optimisation works on symmetric polynomials.  A basis element is a pair
``(b, nu)`` standing for ``(1 - P_1)^b * P_nu`` where ``P_j = sum_i t_i^j`` and
``nu`` is a partition with parts >= 2; with ``b + |nu| <= d`` these span exactly
the polynomials in ``P_1, ..., P_d`` of weighted degree at most ``d``.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .tuples import as_fraction

log = logging.getLogger(__name__)

Exponent = tuple[int, ...]


def simplex_monomial_integral(e) -> Fraction:
    """Integral of prod t_i^e_i over {t_i >= 0, sum t_i <= 1}: prod e_i! / (k + sum e)!."""
    e = tuple(int(v) for v in e)
    if any(v < 0 for v in e):
        raise ValueError("exponents must be nonnegative")
    return Fraction(math.prod(math.factorial(v) for v in e), math.factorial(len(e) + sum(e)))


def dirichlet_integral(c: int, e) -> Fraction:
    """Integral of (1 - sum t)^c prod t_i^e_i over the len(e)-dimensional simplex."""
    e = tuple(e)
    num = math.factorial(c) * math.prod(math.factorial(v) for v in e)
    return Fraction(num, math.factorial(len(e) + c + sum(e)))


@dataclass(frozen=True)
class SimplexPoly:
    """A polynomial F(t_1..t_k) used on the simplex and taken to be 0 outside it."""

    k: int
    terms: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        clean = {}
        for e, c in dict(self.terms).items():
            e = tuple(int(v) for v in e)
            if len(e) != self.k or any(v < 0 for v in e):
                raise ValueError(f"bad exponent vector {e} for k={self.k}")
            c = as_fraction(c)
            if c:
                clean[e] = clean.get(e, Fraction(0)) + c
        object.__setattr__(self, "terms", {e: c for e, c in clean.items() if c})

    @classmethod
    def constant(cls, k: int, c=1) -> "SimplexPoly":
        return cls(k, {(0,) * k: c})

    @classmethod
    def variable(cls, k: int, i: int) -> "SimplexPoly":
        e = [0] * k
        e[i] = 1
        return cls(k, {tuple(e): 1})

    @classmethod
    def power_sum(cls, k: int, j: int) -> "SimplexPoly":
        terms = {}
        for i in range(k):
            e = [0] * k
            e[i] = j
            terms[tuple(e)] = Fraction(1)
        return cls(k, terms)

    def __add__(self, other):
        other = self._coerce(other)
        terms = dict(self.terms)
        for e, c in other.terms.items():
            terms[e] = terms.get(e, Fraction(0)) + c
        return SimplexPoly(self.k, terms)

    __radd__ = __add__

    def __neg__(self):
        return SimplexPoly(self.k, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        terms: dict = {}
        for (e1, c1), (e2, c2) in product(self.terms.items(), other.terms.items()):
            e = tuple(a + b for a, b in zip(e1, e2))
            terms[e] = terms.get(e, Fraction(0)) + c1 * c2
        return SimplexPoly(self.k, terms)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        out = SimplexPoly.constant(self.k)
        for _ in range(n):
            out = out * self
        return out

    def _coerce(self, other) -> "SimplexPoly":
        if isinstance(other, SimplexPoly):
            if other.k != self.k:
                raise ValueError("dimension mismatch")
            return other
        return SimplexPoly.constant(self.k, other)

    @property
    def degree(self) -> int:
        return max((sum(e) for e in self.terms), default=0)

    def is_zero(self) -> bool:
        return not self.terms

    def __call__(self, t, ctx=None):
        """Value at a point, 0 outside the simplex.  Works for float and mpf entries."""
        if len(t) != self.k:
            raise ValueError("point has wrong dimension")
        if any(v < 0 for v in t) or sum(t) > 1:
            return 0 * t[0]
        total = 0 * t[0]
        for e, c in self.terms.items():
            term = _scalar(c, t[0])
            for v, p in zip(t, e):
                if p:
                    term = term * v**p
            total = total + term
        return total


def _scalar(c: Fraction, like):
    """Fraction converted to the numeric type of ``like`` (float or mpf)."""
    try:
        import mpmath

        if isinstance(like, mpmath.mpf):
            return mpmath.mpf(c.numerator) / c.denominator
    except ImportError:  # pragma: no cover
        pass
    return c.numerator / c.denominator


def I_k(F: SimplexPoly) -> Fraction:
    """Exact integral of F^2 over the simplex."""
    items = list(F.terms.items())
    total = Fraction(0)
    for i, (e1, c1) in enumerate(items):
        for e2, c2 in items[i:]:
            v = c1 * c2 * simplex_monomial_integral(tuple(a + b for a, b in zip(e1, e2)))
            total += v if e1 == e2 else 2 * v
    return total


def J_k_m(F: SimplexPoly, m: int) -> Fraction:
    """Exact integral over t_{i != m} of (integral over t_m of F)^2; m is 1-based."""
    if not 1 <= m <= F.k:
        raise ValueError(f"m={m} outside 1..{F.k}")
    j = m - 1
    # integral_0^s t^e dt = s^(e+1)/(e+1) with s = 1 - sum_{i != m} t_i
    inner = [(e[j] + 1, e[:j] + e[j + 1 :], c / (e[j] + 1)) for e, c in F.terms.items()]
    total = Fraction(0)
    for i, (p1, r1, c1) in enumerate(inner):
        for j in range(i, len(inner)):
            p2, r2, c2 = inner[j]
            v = c1 * c2 * dirichlet_integral(p1 + p2, tuple(a + b for a, b in zip(r1, r2)))
            total += v if i == j else 2 * v
    return total


def J_total(F: SimplexPoly) -> Fraction:
    return sum((J_k_m(F, m) for m in range(1, F.k + 1)), Fraction(0))


# -- symmetric basis ---------------------------------------------------------


def partitions_min2(n: int, largest: int | None = None):
    """Partitions of n into parts >= 2, parts in nonincreasing order."""
    largest = n if largest is None else largest
    if n == 0:
        yield ()
        return
    for p in range(min(n, largest), 1, -1):
        for rest in partitions_min2(n - p, p):
            yield (p,) + rest


def _multiset_split(parts: tuple[int, ...]):
    """All sub-multisets S of ``parts``: yields (sum(S), parts minus S, multiplicity)."""
    values = sorted(set(parts), reverse=True)
    counts = [parts.count(v) for v in values]
    for choice in product(*(range(c + 1) for c in counts)):
        taken = sum(v * c for v, c in zip(values, choice))
        rest = tuple(v for v, c, n in zip(values, choice, counts) for _ in range(n - c))
        mult = math.prod(math.comb(n, c) for n, c in zip(counts, choice))
        yield taken, rest, mult


@lru_cache(maxsize=None)
def power_sum_moment(parts: tuple[int, ...], k: int) -> int:
    """Sum over set partitions of ``parts`` of (k)_{#blocks} * prod (block sum)!.

    Integrating P_parts * (1 - P_1)^c over the k-simplex gives this times
    c! / (k + c + sum(parts))!.
    """
    if not parts:
        return 1
    if k <= 0:
        return 0
    first, rest = parts[0], parts[1:]
    total = 0
    for taken, remaining, mult in _multiset_split(rest):
        total += mult * math.factorial(first + taken) * power_sum_moment(remaining, k - 1)
    return k * total


def _merge(a: tuple[int, ...], b: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(sorted(a + b, reverse=True))


class BasisElement(NamedTuple):
    b: int
    nu: tuple[int, ...]

    @property
    def degree(self) -> int:
        return self.b + sum(self.nu)

    def label(self) -> str:
        ps = "".join(f"*P{j}" for j in self.nu)
        return f"(1-P1)^{self.b}{ps}"


def symmetric_basis(k: int, degree: int, family: str = "power") -> list[BasisElement]:
    """Basis of symmetric polynomials of weighted degree <= degree.

    ``power``: all (1-P1)^b P_nu.  ``maynard``: only nu = (2, ..., 2).
    Elements using P_j with j > k are dropped, since those power sums are
    polynomials in P_1..P_k and would make the Gram matrix singular.
    """
    if degree < 0:
        raise ValueError("degree must be >= 0")
    out = []
    for deg in range(degree + 1):
        for b in range(deg + 1):
            if family == "power":
                nus = list(partitions_min2(deg - b))
            elif family == "maynard":
                nus = [(2,) * ((deg - b) // 2)] if (deg - b) % 2 == 0 else []
            else:
                raise ValueError(f"unknown basis family {family!r}")
            out.extend(BasisElement(b, nu) for nu in nus)
    kept = [el for el in out if all(j <= k for j in el.nu)]
    if len(kept) < len(out):
        warnings.warn(
            f"pruned {len(out) - len(kept)} basis elements using P_j with j > k={k}",
            stacklevel=2,
        )
    return kept


def _inner_terms(el: BasisElement) -> list[tuple[int, tuple[int, ...], Fraction]]:
    """Integral over t_1 in [0, u] of (u - t_1)^b P_nu, u = 1 - P'_1, as sum c u^e P'_rest."""
    out = []
    for a, rest, mult in _multiset_split(el.nu):
        coef = Fraction(mult * math.factorial(el.b) * math.factorial(a), math.factorial(a + el.b + 1))
        out.append((a + el.b + 1, rest, coef))
    return out


def gram_matrices(k: int, basis: list[BasisElement]) -> tuple[list, list]:
    """Exact Gram matrices: I[i][j] = I_k(f_i f_j), J[i][j] = sum_m J_k^(m) bilinear form."""
    n = len(basis)
    I = [[Fraction(0)] * n for _ in range(n)]
    J = [[Fraction(0)] * n for _ in range(n)]
    inner = [_inner_terms(el) for el in basis]
    for i, ei in enumerate(basis):
        for j in range(i, n):
            ej = basis[j]
            nu = _merge(ei.nu, ej.nu)
            c = ei.b + ej.b
            I[i][j] = I[j][i] = Fraction(
                math.factorial(c) * power_sum_moment(nu, k), math.factorial(k + c + sum(nu))
            )
            acc = Fraction(0)
            for e1, r1, c1 in inner[i]:
                for e2, r2, c2 in inner[j]:
                    rest = _merge(r1, r2)
                    e = e1 + e2
                    acc += c1 * c2 * Fraction(
                        math.factorial(e) * power_sum_moment(rest, k - 1),
                        math.factorial(k - 1 + e + sum(rest)),
                    )
            # by symmetry each of the k functionals J^(m) contributes equally
            J[i][j] = J[j][i] = k * acc
    return I, J


@dataclass(frozen=True)
class SymmetricPoly:
    """F = sum_j c_j (1 - P_1)^b_j P_nu_j, evaluated through power sums (no monomial expansion)."""

    k: int
    basis: tuple[BasisElement, ...]
    coefficients: tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.basis) != len(self.coefficients):
            raise ValueError("basis and coefficients differ in length")
        object.__setattr__(self, "basis", tuple(BasisElement(int(b), tuple(nu)) for b, nu in self.basis))
        object.__setattr__(self, "coefficients", tuple(as_fraction(c) for c in self.coefficients))

    @classmethod
    def constant(cls, k: int, c=1) -> "SymmetricPoly":
        return cls(k, (BasisElement(0, ()),), (c,))

    @property
    def degree(self) -> int:
        return max((el.degree for el in self.basis), default=0)

    def __call__(self, t):
        if len(t) != self.k:
            raise ValueError("point has wrong dimension")
        zero = 0 * t[0]
        if any(v < 0 for v in t) or sum(t) > 1:
            return zero
        top = max((max(el.nu, default=1) for el in self.basis), default=1)
        P = {j: sum((v**j for v in t), zero) for j in range(1, top + 1)}
        total = zero
        for c, el in zip(self.coefficients, self.basis):
            term = _scalar(c, t[0]) * (1 - P[1]) ** el.b
            for j in el.nu:
                term = term * P[j]
            total = total + term
        return total

    def functionals(self) -> tuple[Fraction, Fraction]:
        """Exact (I_k(F), sum_m J_k^(m)(F))."""
        I, J = gram_matrices(self.k, list(self.basis))
        c = self.coefficients
        n = len(c)
        I_val = sum((c[i] * c[j] * I[i][j] for i in range(n) for j in range(n)), Fraction(0))
        J_val = sum((c[i] * c[j] * J[i][j] for i in range(n) for j in range(n)), Fraction(0))
        return I_val, J_val

    def to_simplex_poly(self) -> SimplexPoly:
        k = self.k
        one_minus_p1 = 1 - SimplexPoly.power_sum(k, 1)
        F = SimplexPoly(k, {})
        for c, el in zip(self.coefficients, self.basis):
            term = one_minus_p1**el.b
            for j in el.nu:
                term = term * SimplexPoly.power_sum(k, j)
            F = F + c * term
        return F


def functional_values(F) -> tuple[Fraction, list[Fraction]]:
    """(I_k(F), [J_k^(1)(F), ..., J_k^(k)(F)]) for a SimplexPoly or SymmetricPoly."""
    if isinstance(F, SymmetricPoly):
        I_val, J_val = F.functionals()
        return I_val, [J_val / F.k] * F.k
    return I_k(F), [J_k_m(F, m) for m in range(1, F.k + 1)]


def _integer_matrix(M: list) -> tuple[list[list[int]], int]:
    den = 1
    for row in M:
        for v in row:
            den = math.lcm(den, v.denominator)
    return [[v.numerator * (den // v.denominator) for v in row] for row in M], den


def _quad_form(M: list[list[int]], c: list[int]) -> int:
    return sum(ci * sum(mij * cj for mij, cj in zip(row, c)) for ci, row in zip(c, M) if ci)


def rayleigh_quotient(coeffs, I: list, J: list) -> Fraction:
    """Exact (c^T J c) / (c^T I c) for rational coefficients."""
    c = [as_fraction(v) if not isinstance(v, (int, Fraction)) else Fraction(v) for v in coeffs]
    den_c = math.lcm(*(v.denominator for v in c)) if c else 1
    ci = [int(v * den_c) for v in c]
    Ii, dI = _integer_matrix(I)
    Ji, dJ = _integer_matrix(J)
    return Fraction(_quad_form(Ji, ci) * dI, _quad_form(Ii, ci) * dJ)


@dataclass(frozen=True)
class VariationalResult:
    k: int
    degree: int
    family: str
    basis: tuple[BasisElement, ...]
    Mk_lower: float
    certified: Fraction
    coefficients: tuple[Fraction, ...]
    I_value: Fraction
    J_values: tuple[Fraction, ...]
    eigenvalue: float

    def basis_labels(self) -> list[str]:
        return [el.label() for el in self.basis]

    def to_symmetric_poly(self) -> SymmetricPoly:
        return SymmetricPoly(self.k, self.basis, self.coefficients)

    def to_simplex_poly(self) -> SimplexPoly:
        """Monomial expansion; only sensible for small k."""
        return self.to_symmetric_poly().to_simplex_poly()

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "degree": self.degree,
            "family": self.family,
            "basis": self.basis_labels(),
            "basis_raw": [[el.b, list(el.nu)] for el in self.basis],
            "Mk_lower": self.Mk_lower,
            "certified_quotient": f"{self.certified.numerator}/{self.certified.denominator}",
            "eigenvalue": self.eigenvalue,
            "coefficients": [str(c) for c in self.coefficients],
            "I_value": str(self.I_value),
            "J_values": [str(v) for v in self.J_values],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "VariationalResult":
        return cls(
            k=int(d["k"]),
            degree=int(d["degree"]),
            family=d["family"],
            basis=tuple(BasisElement(int(b), tuple(nu)) for b, nu in d["basis_raw"]),
            Mk_lower=float(d["Mk_lower"]),
            certified=Fraction(d["certified_quotient"]),
            coefficients=tuple(Fraction(c) for c in d["coefficients"]),
            I_value=Fraction(d["I_value"]),
            J_values=tuple(Fraction(v) for v in d["J_values"]),
            eigenvalue=float(d["eigenvalue"]),
        )


def _rationalize(v: np.ndarray, shift: list[int], bits: int = 60) -> list[Fraction]:
    """Round v to ``bits`` bits and undo the power-of-two basis scaling exactly.

    The result is normalised so the largest |coefficient| is 1.
    """
    scale = np.max(np.abs(v))
    if scale == 0:
        raise ValueError("zero eigenvector")
    ints = [int(round(float(x) / float(scale) * 2**bits)) for x in v]
    first = next(i for i in ints if i)
    sign = 1 if first > 0 else -1
    c = [Fraction(sign * i) * Fraction(2) ** e for i, e in zip(ints, shift)]
    g = max(abs(x) for x in c)
    return [x / g for x in c]


def maximize_ratio(
    I: list, J: list, tie_rtol: float = 1e-9, rank: int = 1
) -> tuple[Fraction, list[Fraction], float]:
    """Largest generalized eigenvalue of J c = lambda I c, certified in rationals.

    Returns (certified quotient, rational coefficients, float eigenvalue).
    ``rank`` > 1 selects the rank-th largest eigenpair instead (no certification
    of the maximum is implied then).
    Every eigenvector in a (numerically) degenerate top cluster is certified;
    the largest certified quotient wins, ties broken by the lexicographically
    largest coefficient vector.
    """
    n = len(I)
    # Entries fall far below float range for large k, so each basis function is
    # first rescaled by an exact power of two bringing its I-diagonal near 1.
    shift = [(I[i][i].denominator.bit_length() - I[i][i].numerator.bit_length()) // 2 for i in range(n)]

    def scaled(M):
        return np.array([[float(M[i][j] * Fraction(2) ** (shift[i] + shift[j])) for j in range(n)] for i in range(n)])

    If, Jf = scaled(I), scaled(J)
    s = 1.0 / np.sqrt(np.diag(If))
    Is = If * s[:, None] * s[None, :]
    Js = Jf * s[:, None] * s[None, :]
    try:
        w, V = scipy.linalg.eigh(Js, Is)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError("I-Gram matrix is not positive definite") from exc
    if not 1 <= rank <= n:
        raise ValueError(f"rank {rank} outside 1..{n}")
    top = w[-rank]
    if rank == 1:
        cluster = [i for i in range(n) if abs(w[i] - top) <= tie_rtol * max(1.0, abs(top))]
    else:
        cluster = [n - rank]
    best = None
    for i in cluster:
        c = _rationalize(V[:, i] * s, shift)
        q = rayleigh_quotient(c, I, J)
        key = (q, c)
        if best is None or key > best[0]:
            best = (key, c, q)
    _, c, q = best
    return q, c, float(top)


def optimize_Mk(
    k: int, degree: int, family: str = "power", basis_scale=None, rank: int = 1
) -> VariationalResult:
    """Certified lower bound for M_k over the symmetric basis of the given degree.

    ``basis_scale`` multiplies each basis function by a constant; the bound is
    unchanged and the returned coefficients rescale inversely.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    basis = symmetric_basis(k, degree, family)
    if not basis:
        raise ValueError("empty basis")
    I, J = gram_matrices(k, basis)
    if basis_scale is not None:
        sc = [as_fraction(v) for v in basis_scale]
        if len(sc) != len(basis):
            raise ValueError("basis_scale length mismatch")
        I = [[I[i][j] * sc[i] * sc[j] for j in range(len(basis))] for i in range(len(basis))]
        J = [[J[i][j] * sc[i] * sc[j] for j in range(len(basis))] for i in range(len(basis))]
    q, c, top = maximize_ratio(I, J, rank=rank)
    n = len(basis)
    I_val = sum((c[i] * c[j] * I[i][j] for i in range(n) for j in range(n) if c[i] and c[j]), Fraction(0))
    J_tot = sum((c[i] * c[j] * J[i][j] for i in range(n) for j in range(n) if c[i] and c[j]), Fraction(0))
    log.info("M_%d >= %.12f (degree %d, %d basis functions)", k, float(q), degree, n)
    return VariationalResult(
        k=k,
        degree=degree,
        family=family,
        basis=tuple(basis),
        Mk_lower=float(q),
        certified=q,
        coefficients=tuple(c),
        I_value=I_val,
        J_values=tuple([J_tot / k] * k),
        eigenvalue=top,
    )


class Threshold(NamedTuple):
    m: int
    value: Fraction
    conclusive: bool


def rho_threshold(delta, eps0, beta, Mk) -> Threshold:
    """m = ceil((delta - 0.525 + eps0)/2 * (1 - beta) * M_k) - 1, exactly.

    ``conclusive`` is False when m < 0, i.e. not even one form is forced prime.
    """
    delta, eps0, beta, Mk = (as_fraction(v) for v in (delta, eps0, beta, Mk))
    if not Fraction(525, 1000) <= delta <= 1:
        raise ValueError(f"delta={delta} outside [0.525, 1]")
    if beta > 1:
        raise ValueError("beta must be <= 1")
    if Mk <= 0:
        raise ValueError("M_k must be positive")
    value = (delta - Fraction(525, 1000) + eps0) / 2 * (1 - beta) * Mk
    m = math.ceil(value) - 1
    return Threshold(m, value, m >= 0)


RHO_OFFSET = Fraction(1, 2)


def rho_for(m: int) -> Fraction:
    """A concrete rho_m with floor(rho_m) = m."""
    return m + RHO_OFFSET
