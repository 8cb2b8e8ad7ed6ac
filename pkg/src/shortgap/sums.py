"""Weighted sums over n = v0 (mod W) in a short interval, with their main terms.

Terms are visited along the progression n_j = n_0 + j*W.  For each table entry
d the condition d_i | L_i(n) for all i picks out one residue class of j modulo
prod(d_i), so the inner divisor sums are assembled by strided additions
instead of factoring any n.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from .primes import Interval, base_primes, sieve_interval
from .tuples import AdmissibleTuple, SieveContext
from .weights import WeightTable

log = logging.getLogger(__name__)

SHARD = 1 << 20


@dataclass
class SumReport:
    value: float
    n_count: int
    main_term: float
    ratio: float
    params: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def _report(value: float, n_count: int, main: float, params: dict, flags: list) -> SumReport:
    ratio = value / main if main else math.nan
    return SumReport(float(value), int(n_count), float(main), float(ratio), params, flags)


# -- the progression and divisor sums ---------------------------------------


def progression(iv: Interval, W: int, v0: int) -> tuple[int, int]:
    """(first n > lo with n = v0 mod W, number of such n <= hi)."""
    n0 = iv.lo + 1 + (v0 - iv.lo - 1) % W
    count = max(0, (iv.hi - n0) // W + 1)
    return n0, count


def _entry_residue(d: tuple[int, ...], t: AdmissibleTuple) -> tuple[int, int]:
    """(c, D) with d_i | L_i(n) for all i iff n = c mod D, D = prod d_i."""
    c, D = 0, 1
    for di, f in zip(d, t.forms):
        if di == 1:
            continue
        if math.gcd(f.a, di) != 1:
            raise ValueError(f"slope {f.a} not invertible modulo {di}")
        r = (-f.h * pow(f.a, -1, di)) % di
        # combine n = c mod D with n = r mod di
        c = c + D * ((r - c) * pow(D, -1, di) % di)
        D *= di
    return c % D, D


@dataclass(frozen=True, eq=False)
class _Plan:
    """Per-entry offsets along one progression, reusable across shards."""

    n0: int
    W: int
    residues: np.ndarray  # j = residues[e] mod moduli[e]
    moduli: np.ndarray
    values: np.ndarray


def _plan(iv: Interval, ctx: SieveContext, lam: WeightTable, skip_m: int | None) -> _Plan:
    if lam.k != ctx.k:
        raise ValueError("weight table and context disagree on k")
    if lam.W != ctx.W:
        raise ValueError("weight table and context disagree on W")
    n0, _ = progression(iv, ctx.W, ctx.v0)
    res, mods, vals = [], [], []
    for d in sorted(lam.entries):
        v = float(lam.entries[d])
        if v == 0:
            continue
        if skip_m is not None and d[skip_m] != 1:
            continue
        c, D = _entry_residue(d, ctx.forms)
        # n0 + j W = c mod D
        j = ((c - n0) * pow(ctx.W, -1, D)) % D if D > 1 else 0
        res.append(j)
        mods.append(D)
        vals.append(v)
    return _Plan(n0, ctx.W, np.array(res, dtype=np.int64), np.array(mods, dtype=np.int64), np.array(vals))


def _divisor_sums(plan: _Plan, start: int, length: int) -> np.ndarray:
    """Sum of lambda_d over the entries dividing, for j in [start, start + length)."""
    acc = np.zeros(length, dtype=np.float64)
    for j, D, v in zip(plan.residues.tolist(), plan.moduli.tolist(), plan.values.tolist()):
        first = (j - start) % D
        acc[first::D] += v
    return acc


def _shards(count: int):
    for start in range(0, count, SHARD):
        yield start, min(SHARD, count - start)


def _n_values(plan: _Plan, start: int, length: int) -> np.ndarray:
    return plan.n0 + plan.W * (start + np.arange(length, dtype=np.int64))


def _form_is_prime(f, n: np.ndarray) -> np.ndarray:
    """Primality of a*n + h over the progression values n (increasing)."""
    vals = f.a * n + f.h
    flags = np.zeros(len(vals), dtype=bool)
    ok = vals >= 2
    if not ok.any():
        return flags
    lo, hi = int(vals[ok][0]) - 1, int(vals[-1])
    seg = sieve_interval(Interval(max(lo, 0), hi))
    flags[ok] = seg.flags[vals[ok] - seg.base - 1]
    return flags


def _least_factor_below(t: AdmissibleTuple, n: np.ndarray, step: int, bound: int) -> np.ndarray:
    """Smallest prime p <= bound dividing prod_i L_i(n), for n = n[0] + step*j; 0 if none."""
    spf = np.zeros(len(n), dtype=np.int64)
    if bound < 2 or len(n) == 0:
        return spf
    n_first = int(n[0])
    # descending primes: the last write at each index is the least prime
    for p in base_primes(bound)[::-1]:
        p = int(p)
        for f in t.forms:
            a = (f.a * step) % p
            b = (f.a * n_first + f.h) % p
            if a == 0:
                if b == 0:
                    spf[:] = p
                continue
            spf[(-b * pow(a, -1, p)) % p :: p] = p
    return spf


def _below_power(p: np.ndarray, n: np.ndarray, c1) -> np.ndarray:
    """p < n^c1 elementwise, exact near ties (c1 rational)."""
    out = np.zeros(len(p), dtype=bool)
    has = p > 0
    if not has.any():
        return out
    c1f = float(c1)
    lp = np.log(p[has].astype(np.float64))
    ln = c1f * np.log(n[has].astype(np.float64))
    res = lp < ln
    close = np.flatnonzero(np.abs(lp - ln) < 1e-9 * np.maximum(1.0, np.abs(ln)))
    if close.size:
        num, den = c1.numerator, c1.denominator
        pv, nv = p[has], n[has]
        for i in close:
            res[i] = int(pv[i]) ** den < int(nv[i]) ** num
    out[has] = res
    return out


def _minus_mask(t: AdmissibleTuple, n: np.ndarray, step: int, x: int, c1) -> np.ndarray:
    """n with P^-(prod_i L_i(n)) < n^c1 (n an arithmetic progression with difference step)."""
    if c1 <= 0:
        return np.zeros(len(n), dtype=bool)
    bound = int(math.floor(float(x) ** float(c1))) + 1
    spf = _least_factor_below(t, n, step, bound)
    return _below_power(spf, n, c1)


def _ctx_minus(ctx: SieveContext, n: np.ndarray) -> np.ndarray:
    return _minus_mask(ctx.forms, n, ctx.W, ctx.x, ctx.c1)


# -- main terms --------------------------------------------------------------


def _functionals(lam: WeightTable):
    if lam.functionals is None:
        return None, None
    return lam.functionals


def phi_of_primorial(W: int) -> int:
    out, p, w = 1, 2, W
    while w > 1:
        if w % p == 0:
            out *= p - 1
            w //= p
        p += 1
    return out


def s1_main_term(h: int, ctx: SieveContext, I_value: float) -> float:
    """(h/W) (phi(W) log R / W)^k I_k(F)."""
    W = ctx.W
    return (h / W) * (phi_of_primorial(W) * math.log(ctx.R) / W) ** ctx.k * I_value


def s2_main_term(h: int, ctx: SieveContext, J_value: float) -> float:
    """(1 - beta) (h/W) (log R / log x) (phi(W) log R / W)^k J_k^(m)(F)."""
    W = ctx.W
    base = (h / W) * (math.log(ctx.R) / math.log(ctx.x))
    base *= (phi_of_primorial(W) * math.log(ctx.R) / W) ** ctx.k * J_value
    return float(1 - ctx.beta) * base


def _params(iv: Interval, ctx: SieveContext, **extra) -> dict:
    d = {"lo": iv.lo, "hi": iv.hi, "x": ctx.x, "k": ctx.k, "W": ctx.W, "v0": ctx.v0, "R": ctx.R,
         "D0": ctx.D0}
    d.update(extra)
    return d


def _flags(iv: Interval, ctx: SieveContext) -> list:
    if ctx.W >= len(iv):
        warnings.warn(f"W={ctx.W} is not smaller than the interval length {len(iv)}", stacklevel=3)
        return ["W>=interval"]
    return []


# -- public sums -------------------------------------------------------------


def _weighted_total(iv, ctx, lam, *, skip_m=None, select=None) -> tuple[float, int]:
    """sum over progression n in iv of select(n) * (divisor sum)^2, shard by shard."""
    n0, count = progression(iv, ctx.W, ctx.v0)
    plan = _plan(iv, ctx, lam, skip_m)
    parts = []
    for start, length in _shards(count):
        w = _divisor_sums(plan, start, length) ** 2
        if select is not None:
            w = w * select(_n_values(plan, start, length))
        parts.append(math.fsum(w.tolist()))
    return math.fsum(parts), count


def S1(iv: Interval, ctx: SieveContext, lam: WeightTable) -> SumReport:
    flags = _flags(iv, ctx)
    value, count = _weighted_total(iv, ctx, lam)
    I_val, _ = _functionals(lam)
    main = s1_main_term(len(iv), ctx, I_val) if I_val is not None else math.nan
    return _report(value, count, main, _params(iv, ctx, I=I_val), flags)


def S2_m(iv: Interval, ctx: SieveContext, lam: WeightTable, m: int, restrict_dm: bool = False) -> SumReport:
    """m is 1-based; ``restrict_dm`` keeps only entries with d_m = 1."""
    if not 1 <= m <= ctx.k:
        raise ValueError(f"m={m} outside 1..{ctx.k}")
    flags = _flags(iv, ctx)
    f = ctx.forms.forms[m - 1]
    value, count = _weighted_total(
        iv, ctx, lam, skip_m=m - 1 if restrict_dm else None, select=lambda n: _form_is_prime(f, n)
    )
    _, J_vals = _functionals(lam)
    main = s2_main_term(len(iv), ctx, J_vals[m - 1]) if J_vals is not None else math.nan
    return _report(value, count, main, _params(iv, ctx, m=m, restrict_dm=restrict_dm), flags)


def S2(iv: Interval, ctx: SieveContext, lam: WeightTable) -> SumReport:
    """sum over m of S2^(m)."""
    reps = [S2_m(iv, ctx, lam, m) for m in range(1, ctx.k + 1)]
    value = math.fsum(r.value for r in reps)
    main = math.fsum(r.main_term for r in reps)
    return _report(value, reps[0].n_count, main, _params(iv, ctx), reps[0].flags)


def _check_prime(p: int) -> None:
    if p < 2 or any(p % int(q) == 0 for q in base_primes(math.isqrt(p))):
        raise ValueError(f"{p} is not prime")


def S1_p_j(iv: Interval, ctx: SieveContext, lam: WeightTable, p: int, j: int) -> float:
    """sum of w(n) over the progression with p | L_j(n); j is 1-based."""
    if not 1 <= j <= ctx.k:
        raise ValueError(f"j={j} outside 1..{ctx.k}")
    if p <= ctx.D0:
        raise ValueError(f"p={p} <= D0={ctx.D0}: L_j(n) is coprime to W on the progression")
    _check_prime(p)
    f = ctx.forms.forms[j - 1]
    value, _ = _weighted_total(iv, ctx, lam, select=lambda n: (f.a * n + f.h) % p == 0)
    return value


def S_minus(iv: Interval, ctx: SieveContext, lam: WeightTable, which: str) -> float:
    """S1^- or S2^-: n restricted to P^-(prod L_i(n)) < n^c1."""
    if which in ("S1-", "S1"):
        value, _ = _weighted_total(iv, ctx, lam, select=lambda n: _ctx_minus(ctx, n))
        return value
    if which in ("S2-", "S2"):

        def sel(n):
            primes = sum(_form_is_prime(f, n).astype(np.int64) for f in ctx.forms.forms)
            return primes * _ctx_minus(ctx, n)

        value, _ = _weighted_total(iv, ctx, lam, select=sel)
        return value
    raise ValueError(f"which must be 'S1-' or 'S2-', got {which!r}")


@dataclass
class ChainCheck:
    """The S^+ decomposition of the threshold argument, from computed pieces."""

    S1: float
    S2: float
    S1_minus: float
    S2_minus: float
    rho: float
    lhs: float
    rhs: float

    @property
    def ok(self) -> bool:
        return abs(self.lhs - self.rhs) <= 1e-9 * max(1.0, abs(self.lhs), abs(self.rhs))


def chain_identity(iv: Interval, ctx: SieveContext, lam: WeightTable, rho) -> ChainCheck:
    """S2^+ - rho S1^+ against (S2 - rho S1) + (rho S1^- - S2^-)."""
    rho = float(rho)
    s1 = S1(iv, ctx, lam).value
    s2 = S2(iv, ctx, lam).value
    s1m = S_minus(iv, ctx, lam, "S1-")
    s2m = S_minus(iv, ctx, lam, "S2-")

    def plus_sel(n):
        primes = sum(_form_is_prime(f, n).astype(np.float64) for f in ctx.forms.forms)
        return (primes - rho) * ~_ctx_minus(ctx, n)

    lhs, _ = _weighted_total(iv, ctx, lam, select=plus_sel)
    rhs = (s2 - rho * s1) + (rho * s1m - s2m)
    return ChainCheck(s1, s2, s1m, s2m, rho, lhs, rhs)


def count_S_H(iv: Interval, t: AdmissibleTuple, ctx: SieveContext, m: int) -> int:
    """n in iv with at least m+1 of the L_i(n) prime and P^-(prod L_i(n)) >= n^c1."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if len(iv) == 0:
        return 0
    n = np.arange(iv.lo + 1, iv.hi + 1, dtype=np.int64)
    primes = np.zeros(len(n), dtype=np.int64)
    for f in t.forms:
        primes += _form_is_prime(f, n)
    small = _minus_mask(t, n, 1, max(ctx.x, iv.hi), ctx.c1)
    return int(np.count_nonzero((primes >= m + 1) & ~small))


# -- error scan --------------------------------------------------------------


@dataclass
class ErrorScanReport:
    Q: int
    per_q: dict
    argmax: dict
    total: float
    main_scale: float
    z0: int
    h_grid: list
    y_grid: list
    mode: str

    @property
    def normalized(self) -> float:
        return self.total / self.main_scale

    def to_dict(self) -> dict:
        d = asdict(self)
        d["per_q"] = {str(q): v for q, v in self.per_q.items()}
        d["argmax"] = {str(q): v for q, v in self.argmax.items()}
        d["normalized"] = self.normalized
        return d


def z0_of(x: int) -> int:
    """floor(x exp(-3 (log x)^(1/3)))."""
    return int(math.floor(x * math.exp(-3 * math.log(x) ** (1 / 3))))


def scan_grids(x: int, z: int) -> tuple[list[int], list[int]]:
    """8 geometric h in [z/4, z] and 4 y in [x/2, x)."""
    hs = sorted({max(1, int(round(v))) for v in np.geomspace(z / 4, z, 8)})
    ys = [x // 2 + i * (x - x // 2) // 4 for i in range(4)]
    return hs, ys


def error_scan(x: int, z: int, Q: int, ctx: SieveContext | None = None, mode: str = "prime") -> ErrorScanReport:
    """Sampled sum over q <= Q of max over (a, h, y) of |E_f(y, h; q, a)|, f = 1_P or f = 0.

    E_f(y,h;q,a) = sum_{y-h<n<=y, n=a (q)} f(n) - h/(z0 phi(q)) sum_{y-z0<n<=y} f(n).
    ``ctx`` is accepted for interface symmetry and only recorded.
    """
    if z > x:
        raise ValueError("z must not exceed x")
    if Q < 1:
        raise ValueError("Q must be >= 1")
    if mode not in ("prime", "zero"):
        raise ValueError(f"unknown mode {mode!r}")
    z0 = z0_of(x)
    hs, ys = scan_grids(x, z)
    reach = max(max(hs), z0)
    lo = max(0, ys[0] - reach)
    if mode == "prime":
        primes = sieve_interval(Interval(lo, ys[-1])).primes()
    else:
        primes = np.zeros(0, dtype=np.int64)
    per_q, argmax = {}, {}
    for q in range(1, Q + 1):
        phi_q = sum(1 for a in range(q) if math.gcd(a, q) == 1)
        best, where = 0.0, None
        for y in ys:
            i_hi = np.searchsorted(primes, y, side="right")
            base = i_hi - np.searchsorted(primes, y - z0, side="right")
            for h in hs:
                window = primes[np.searchsorted(primes, y - h, side="right") : i_hi]
                counts = np.bincount(window % q, minlength=q) if q > 1 else np.array([len(window)])
                expected = h * base / (z0 * phi_q)
                for a in range(q):
                    if math.gcd(a, q) != 1:
                        continue
                    e = abs(float(counts[a]) - expected)
                    if e > best or where is None:
                        best, where = e, {"a": a, "h": int(h), "y": int(y)}
        per_q[q] = best
        argmax[q] = where
    total = math.fsum(per_q.values())
    return ErrorScanReport(Q, per_q, argmax, total, z / math.log(x), z0, hs, ys, mode)
