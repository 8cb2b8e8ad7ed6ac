"""Bookkeeping for the signed decomposition of psi(n, x^(1/2)) and its pointwise checks.

Two Buchstab steps turn psi(n, sqrt x) into

    c1(n) - c_{k+1}(n) - rev(n) + c2(n) + rest(n),

with c1 = psi(n, w0), c_{k+1} = sum_{p | n, w0 <= p < sqrt x} psi(n/p, w(p)),
and the pairs p2 < p1 split into c2 (p2 < w(p1 p2)) and rest (p2 >= w(p1 p2)).
Here w0 = x^(2 delta - 1) and w(m) = x^nu(log m / log x).

The second step assumes w(p) <= p.  Just above w0, nu(alpha) can exceed
alpha, so w(p) > p and the step runs backwards; rev collects the pairs
p1 <= p2 <= w(p1) that this adds back.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from ..primes import Interval, factorize_interval
from ..tuples import SieveContext
from .exponents import nu_float
from .regions import NAMES, membership_batch

ERROR_BOUNDED = "error-bounded"
DISCARDED = "discarded"


@dataclass(frozen=True)
class LedgerTerm:
    id: str
    sign: str
    cls: str
    definition: str
    covered_by: str
    budget: Fraction | None = None


@dataclass(frozen=True)
class DecompositionLedger:
    delta: Fraction
    w0_exponent: Fraction
    terms: tuple[LedgerTerm, ...]

    def check(self) -> list[str]:
        problems = []
        for t in self.terms:
            if t.sign not in "+-" or len(t.sign) != 1:
                problems.append(f"{t.id}: bad sign {t.sign!r}")
            if t.cls not in (ERROR_BOUNDED, DISCARDED):
                problems.append(f"{t.id}: unknown class {t.cls!r}")
            if t.cls == DISCARDED and t.sign != "+":
                problems.append(f"{t.id}: discarded terms must be nonnegative")
        ids = [t.id for t in self.terms]
        if len(set(ids)) != len(ids):
            problems.append("duplicate term ids")
        return problems

    def discarded_budget(self) -> Fraction:
        return sum((t.budget for t in self.terms if t.cls == DISCARDED and t.budget), Fraction(0))


def build_ledger(delta) -> DecompositionLedger:
    delta = Fraction(delta)
    terms = (
        LedgerTerm("c1", "+", ERROR_BOUNDED, "psi(n, w0)", "rough-number sums below w0"),
        LedgerTerm("c2", "+", ERROR_BOUNDED, "pairs w(p1) <= p2 < p1 < sqrt x, p2 < w(p1 p2)",
                   "short-factor bounds, alpha < 1/2 branch"),
        LedgerTerm("c_{k+1}", "-", ERROR_BOUNDED, "sum_{w0 <= p < sqrt x} psi(n/p, w(p))", "short-factor bounds"),
        LedgerTerm("rev", "-", ERROR_BOUNDED, "pairs p1 <= p2 <= w(p1), only where w(p1) > p1",
                   "not covered: needs w(p) <= p"),
        LedgerTerm("c_{r+1}", "+", DISCARDED, "rest with p1 p2^2 >= x", "size estimate, o(1)", Fraction(0)),
        LedgerTerm("A+B", "+", DISCARDED, "rest over regions A and B", "short-factor and two-factor bounds", Fraction(3, 10)),
        LedgerTerm("C", "+", DISCARDED, "rest over region C", "short-factor and two-factor bounds", Fraction(21, 100)),
        LedgerTerm("D", "+", DISCARDED, "rest over region D", "short-factor and two-factor bounds", Fraction(34, 100)),
        LedgerTerm("E+F", "+", DISCARDED, "rest over regions E and F", "kept whole", Fraction(9, 100)),
    )
    return DecompositionLedger(delta, 2 * delta - 1, terms)


@dataclass
class LedgerReport:
    x: int
    delta: float
    lo: int
    hi: int
    checked: int
    expansion_failures: list = field(default_factory=list)
    negativity_failures: list = field(default_factory=list)
    property2_failures: list = field(default_factory=list)
    property2_checked: int = 0
    skipped: list = field(default_factory=list)
    primes_with_w_above_p: list = field(default_factory=list)
    reversed_terms: int = 0
    region_pairs: dict = field(default_factory=dict)
    ledger_problems: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (self.expansion_failures or self.negativity_failures or self.property2_failures
                    or self.ledger_problems)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ok"] = self.ok
        return d


class _Thresholds:
    def __init__(self, x: int, delta: float):
        self.logx = math.log(x)
        self.delta = delta
        self.w0 = x ** (2 * delta - 1)
        self.sqrt_x = math.sqrt(x)
        self._cache: dict[int, float] = {}

    def w(self, m: int) -> float:
        v = self._cache.get(m)
        if v is None:
            v = math.exp(self.logx * nu_float(math.log(m) / self.logx, self.delta))
            self._cache[m] = v
        return v


def _least(factors: tuple[int, ...], skip: list[int]) -> float:
    """Least prime of n / prod(skip) given n's factor list (inf when the quotient is 1)."""
    rest = list(factors)
    for p in skip:
        rest.remove(p)
    return rest[0] if rest else math.inf


def decompose_point(n: int, factors: tuple[int, ...], th: _Thresholds) -> dict:
    """c1, c_{k+1}, rev, c2 and rest at n, plus the contributing (p1, p2) pairs of rest."""
    P = factors[0] if factors else math.inf
    c1 = int(P > th.w0)
    distinct = sorted(set(factors))
    ck1 = rev = 0
    for p in distinct:
        if th.w0 <= p < th.sqrt_x:
            wp = th.w(p)
            ck1 += int(_least(factors, [p]) > wp)
            if wp >= p:
                # [P-(m) >= p] - [P-(m) > w(p)] = sum over p <= p2 <= w(p) of [p2 = P-(m)]
                q = _least(factors, [p])
                rev += int(p <= q <= wp)
    c2 = rest = 0
    rest_pairs = []
    for i, p2 in enumerate(distinct):
        for p1 in distinct[i + 1 :]:
            if not p1 < th.sqrt_x:
                break
            if not th.w(p1) <= p2:
                continue
            # closed threshold: every prime of m is >= p2
            term = int(_least(factors, [p1, p2]) >= p2)
            if not term:
                continue
            if p2 < th.w(p1 * p2):
                c2 += term
            else:
                rest += term
                rest_pairs.append((p1, p2))
    return {"c1": c1, "ck1": ck1, "rev": rev, "c2": c2, "rest": rest, "rest_pairs": rest_pairs, "P": P}


def ledger_build_and_check(ctx: SieveContext, sample_iv: Interval) -> LedgerReport:
    """Evaluate the terms pointwise on sample_iv and check the expansion and property (2)."""
    if len(sample_iv) > 10**6 or sample_iv.hi > 10**12:
        raise ValueError("sample interval must have length <= 10^6 and lie below 10^12")
    x = ctx.x
    th = _Thresholds(x, float(ctx.delta))
    ledger = build_ledger(ctx.delta)
    rep = LedgerReport(x, float(ctx.delta), sample_iv.lo, sample_iv.hi, 0, ledger_problems=ledger.check())
    fac = factorize_interval(sample_iv)
    bad_w = set()
    pairs = []
    for i, factors in enumerate(fac):
        n = sample_iv.lo + 1 + i
        if n < 2:
            continue
        pt = decompose_point(n, factors, th)
        for p in set(factors):
            if th.w0 <= p < th.sqrt_x and th.w(p) > p:
                bad_w.add(p)
        rep.reversed_terms += pt["rev"]
        if min(pt["c1"], pt["ck1"], pt["rev"], pt["c2"], pt["rest"]) < 0:
            rep.negativity_failures.append(n)
        if pt["P"] < th.w0:
            rep.property2_checked += 1
            if pt["c1"] or pt["c2"] or pt["ck1"] or pt["rev"]:
                rep.property2_failures.append(n)
        if n > th.sqrt_x:
            rep.checked += 1
            lhs = int(len(factors) == 1)
            if pt["c1"] - pt["ck1"] - pt["rev"] + pt["c2"] + pt["rest"] != lhs:
                rep.expansion_failures.append(n)
        pairs.extend(pt["rest_pairs"])
    rep.primes_with_w_above_p = sorted(bad_w)
    rep.region_pairs = _tally_regions(pairs, x, ctx.delta)
    return rep


def _tally_regions(pairs: list[tuple[int, int]], x: int, delta) -> dict:
    """Count rest pairs by piece: the p1 p2^2 >= x tail, then regions A-F (alpha rounded to 1/N)."""
    out = {"tail": 0, **{n: 0 for n in NAMES}, "none": 0}
    if not pairs:
        return out
    p1 = np.array([p for p, _ in pairs], dtype=np.float64)
    p2 = np.array([q for _, q in pairs], dtype=np.float64)
    tail = p1 * p2 * p2 >= x
    out["tail"] = int(tail.sum())
    N = 2**31 - 1
    logx = math.log(x)
    a = np.round(np.log(p1[~tail]) / logx * N).astype(np.int64)
    b = np.round(np.log(p2[~tail]) / logx * N).astype(np.int64)
    mem = membership_batch(a, b, N, delta)
    anyr = np.zeros(len(a), dtype=bool)
    for name in NAMES:
        out[name] = int(mem[name].sum())
        anyr |= mem[name]
    out["none"] = int((~anyr).sum())
    return out
