"""Term-by-term reference versions of the weighted sums.

Each n in the progression is visited individually: its weight comes from
``weights.weight`` and primality or least factors from ``smallest_prime_factor``.
Intended for small intervals only, as an independent cross-check.
"""

from __future__ import annotations

import math
from fractions import Fraction

from .primes import Interval, smallest_prime_factor
from .tuples import SieveContext
from .weights import WeightTable, weight


def _is_prime(v: int) -> bool:
    return v >= 2 and smallest_prime_factor(v) == v


def _progression(iv: Interval, ctx: SieveContext):
    n = iv.lo + 1 + (ctx.v0 - iv.lo - 1) % ctx.W
    while n <= iv.hi:
        yield n
        n += ctx.W


def least_factor_of_product(values) -> int | None:
    ps = [smallest_prime_factor(v) for v in values if v > 1]
    return min(ps) if ps else None


def below_power(p: int, n: int, c1: Fraction) -> bool:
    """p < n^c1; logs decide unless they are within 1e-12, then integers do."""
    lp, ln = math.log(p), float(c1) * math.log(n)
    if abs(lp - ln) > 1e-12 * max(1.0, abs(ln)):
        return lp < ln
    return p**c1.denominator < n**c1.numerator


def is_minus(n: int, ctx: SieveContext) -> bool:
    """P^-(prod L_i(n)) < n^c1."""
    c1 = Fraction(ctx.c1)
    if c1 <= 0:
        return False
    p = least_factor_of_product(ctx.forms.values(n))
    return p is not None and below_power(p, n, c1)


def _total(iv, ctx, lam, factor) -> float:
    terms = []
    for n in _progression(iv, ctx):
        f = factor(n)
        if f:
            terms.append(f * weight(n, ctx.forms, lam))
    return math.fsum(terms)


def S1(iv: Interval, ctx: SieveContext, lam: WeightTable) -> float:
    return _total(iv, ctx, lam, lambda n: 1)


def S2_m(iv: Interval, ctx: SieveContext, lam: WeightTable, m: int) -> float:
    f = ctx.forms.forms[m - 1]
    return _total(iv, ctx, lam, lambda n: int(_is_prime(f(n))))


def S2(iv: Interval, ctx: SieveContext, lam: WeightTable) -> float:
    return math.fsum(S2_m(iv, ctx, lam, m) for m in range(1, ctx.k + 1))


def S1_p_j(iv: Interval, ctx: SieveContext, lam: WeightTable, p: int, j: int) -> float:
    f = ctx.forms.forms[j - 1]
    return _total(iv, ctx, lam, lambda n: int(f(n) % p == 0))


def S_minus(iv: Interval, ctx: SieveContext, lam: WeightTable, which: str) -> float:
    if which in ("S1-", "S1"):
        return _total(iv, ctx, lam, lambda n: int(is_minus(n, ctx)))
    if which in ("S2-", "S2"):
        return _total(
            iv, ctx, lam,
            lambda n: is_minus(n, ctx) * sum(_is_prime(f(n)) for f in ctx.forms.forms),
        )
    raise ValueError(f"which must be 'S1-' or 'S2-', got {which!r}")


def count_S_H(iv: Interval, ctx: SieveContext, m: int) -> int:
    c1 = Fraction(ctx.c1)
    out = 0
    for n in range(iv.lo + 1, iv.hi + 1):
        vals = ctx.forms.values(n)
        if sum(_is_prime(v) for v in vals) < m + 1:
            continue
        p = least_factor_of_product(vals)
        small = c1 > 0 and p is not None and below_power(p, n, c1)
        out += not small
    return out
