"""Buchstab's identity on concrete integers and the Buchstab function omega(u)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..primes import base_primes, psi, smallest_prime_factor

OMEGA_STEP = 1e-4
OMEGA_UMAX = 50.0


def psi_closed(n: int, p: float) -> int:
    """1 iff every prime factor of n is >= p (1 for n = 1).

    The sum in Buchstab's identity needs this closed threshold: with the open
    version psi(m, p) the term for n = p^2 m' (p the least prime) is lost.
    """
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return 1 if n == 1 else int(smallest_prime_factor(n) >= p)


def _primes_dividing_in(n: int, lo: float, hi: float, closed_lo: bool, closed_hi: bool) -> list[int]:
    out = []
    for p in base_primes(int(math.floor(hi))):
        p = int(p)
        if p > n:
            break
        if n % p:
            continue
        if (p > lo or (closed_lo and p == lo)) and (p < hi or (closed_hi and p == hi)):
            out.append(p)
    return out


def buchstab_rhs(n: int, w1: float, w2: float) -> int:
    """psi(n, w2) - sum over primes w2 < p <= w1, p | n, of psi_closed(n/p, p).

    Equal to psi(n, w1) for every n (the least prime factor is either > w1,
    <= w2, or exactly one p in (w2, w1]).
    """
    total = psi(n, w2)
    for p in _primes_dividing_in(n, w2, w1, closed_lo=False, closed_hi=True):
        total -= psi_closed(n // p, p)
    return total


def buchstab_rhs_as_printed(n: int, w1: float, w2: float) -> int:
    """psi(n, w2) - sum over w2 <= p < w1 of psi(n/p, p), all with the open threshold."""
    total = psi(n, w2)
    for p in _primes_dividing_in(n, w2, w1, closed_lo=True, closed_hi=False):
        total -= psi(n // p, p)
    return total


def buchstab_identity_check(n: int, w1: float, w2: float) -> bool:
    """True iff psi(n, w1) equals the Buchstab expansion at w2 for this n."""
    if not 2 <= w2 < w1:
        raise ValueError("need 2 <= w2 < w1")
    return psi(n, w1) == buchstab_rhs(n, w1, w2)


def identity_failures(lo: int, hi: int, w1: float, w2: float, printed: bool = False) -> list[int]:
    """All n in (lo, hi] where the expansion disagrees with psi(n, w1)."""
    rhs = buchstab_rhs_as_printed if printed else buchstab_rhs
    if not 2 <= w2 < w1:
        raise ValueError("need 2 <= w2 < w1")
    return [n for n in range(lo + 1, hi + 1) if psi(n, w1) != rhs(n, w1, w2)]


# -- the Buchstab function ---------------------------------------------------


@dataclass(frozen=True, eq=False)
class OmegaTable:
    """omega on a grid u = 1 + i*step, with its running integral from 1."""

    step: float
    u: np.ndarray
    omega: np.ndarray
    cumulative: np.ndarray

    def __call__(self, u):
        u = np.asarray(u, dtype=np.float64)
        if np.any(u < 1):
            raise ValueError("omega(u) is defined for u >= 1")
        if np.any(u > self.u[-1]):
            raise ValueError(f"u beyond table range {self.u[-1]}")
        out = np.interp(u, self.u, self.omega)
        exact = u <= 2
        return np.where(exact, 1.0 / np.where(exact, u, 1.0), out)

    def integral(self, a, b):
        """Integral of omega over [a, b] (1 <= a, b <= umax)."""
        Fa = np.interp(a, self.u, self.cumulative)
        Fb = np.interp(b, self.u, self.cumulative)
        return Fb - Fa


def _omega_grid(step: float, umax: float):
    per = int(round(1 / step))
    if abs(per * step - 1) > 1e-12:
        raise ValueError("step must divide 1")
    units = int(math.ceil(umax - 1))
    n = units * per + 1
    u = 1 + np.arange(n) / per
    g = np.empty(n)  # g = u * omega(u)
    g[: per + 1] = 1.0
    omega = np.empty(n)
    omega[: per + 1] = 1.0 / u[: per + 1]
    for j in range(1, units):
        a, b = j * per, (j + 1) * per
        lagged = omega[a - per : b - per + 1]  # omega(u - 1) on [u_a, u_b]
        incr = np.concatenate(([0.0], np.cumsum(0.5 * step * (lagged[1:] + lagged[:-1]))))
        g[a : b + 1] = g[a] + incr
        omega[a : b + 1] = g[a : b + 1] / u[a : b + 1]
    cum = np.concatenate(([0.0], np.cumsum(0.5 * step * (omega[1:] + omega[:-1]))))
    return u, omega, cum


@lru_cache(maxsize=4)
def omega_table(step: float = OMEGA_STEP, umax: float = OMEGA_UMAX) -> OmegaTable:
    u, omega, cum = _omega_grid(step, umax)
    for arr in (u, omega, cum):
        arr.setflags(write=False)
    return OmegaTable(step, u, omega, cum)


def richardson_error(u: float, step: float = OMEGA_STEP) -> float:
    """|omega_h(u) - omega_2h(u)| / 3, the trapezoid error estimate at u."""
    fine = float(omega_table(step)(u))
    coarse = float(omega_table(2 * step)(u))
    return abs(fine - coarse) / 3


def buchstab_omega(u: float) -> float:
    """omega(u): 1/u on [1, 2], (u omega(u))' = omega(u - 1) beyond."""
    if u < 1:
        raise ValueError(f"omega(u) requires u >= 1, got {u}")
    if u <= 2:
        return 1.0 / u
    return float(omega_table()(u))
