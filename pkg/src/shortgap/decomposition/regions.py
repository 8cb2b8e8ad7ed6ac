"""The six regions A-F of (alpha1, alpha2) pairs and their loss integrals.

A region is a conjunction of clauses; each clause is a disjunction of atoms.
An atom is either a linear inequality c0 + c1*alpha1 + c2*alpha2 >= 0 or the
condition alpha2 >= nu(alpha1).  Upper bounds written min(f, g) become two
clauses, max(f, g) becomes one clause with two atoms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import integrate

from ..tuples import as_fraction
from .buchstab import omega_table
from .exponents import nu_cap, nu_clamped

NAMES = ("A", "B", "C", "D", "E", "F")
PAPER_BUDGET = {"A+B": Fraction(3, 10), "E+F": Fraction(9, 100), "C": Fraction(21, 100), "D": Fraction(34, 100)}
BUDGET_TOTAL = Fraction(94, 100)


@dataclass(frozen=True)
class Linear:
    """c0 + c1*alpha1 + c2*alpha2 >= 0."""

    c0: Fraction
    c1: Fraction
    c2: Fraction
    text: str

    def value(self, a1: Fraction, a2: Fraction) -> Fraction:
        return self.c0 + self.c1 * a1 + self.c2 * a2


@dataclass(frozen=True)
class NuLower:
    """alpha2 >= nu(alpha1)."""

    delta: Fraction
    text: str = "alpha2 >= nu(alpha1)"

    def value(self, a1: Fraction, a2: Fraction) -> Fraction:
        return a2 - nu_clamped(a1, self.delta)


Atom = Linear | NuLower


@dataclass(frozen=True)
class RegionSpec:
    name: str
    delta: Fraction
    clauses: tuple[tuple[Atom, ...], ...]
    third_factor_prime: bool
    alpha1_range: tuple[Fraction, Fraction]

    def inequalities(self) -> list[str]:
        return [" or ".join(a.text for a in clause) for clause in self.clauses]

    def contains(self, a1, a2) -> bool:
        a1, a2 = as_fraction(a1), as_fraction(a2)
        return all(any(atom.value(a1, a2) >= 0 for atom in clause) for clause in self.clauses)

    def on_boundary(self, a1, a2) -> bool:
        a1, a2 = as_fraction(a1), as_fraction(a2)
        return any(atom.value(a1, a2) == 0 for clause in self.clauses for atom in clause)


def _lin(c0, c1, c2, text) -> Linear:
    return Linear(Fraction(c0), Fraction(c1), Fraction(c2), text)


def _ge_a1(v, text):  # alpha1 >= v
    return _lin(-v, 1, 0, text)


def _le_a1(v, text):  # alpha1 <= v
    return _lin(v, -1, 0, text)


def region_specs(delta) -> dict[str, RegionSpec]:
    """The inequality systems exactly as displayed, at this delta."""
    d = as_fraction(delta)
    if not Fraction(524, 1000) < d <= 1:
        raise ValueError(f"delta={d} outside (0.524, 1]")
    half = Fraction(1, 2)
    e = (3 * d - 1) / 2  # (3 delta - 1)/2
    q = (3 - 3 * d) / 4  # (3 - 3 delta)/4
    nu0 = nu_clamped(0, d)
    third = lambda text: _lin(Fraction(1, 3), Fraction(-1, 3), -1, text)  # (1-a1)/3 - a2 >= 0
    specs = {
        "A": (
            [
                [_ge_a1(Fraction(1, 4), "alpha1 >= 1/4")],
                [_le_a1(Fraction(2, 5), "alpha1 <= 2/5")],
                [_lin(Fraction(-1, 3), Fraction(1, 3), 1, "alpha2 >= (1-alpha1)/3")],
                [_lin(0, 1, -1, "alpha2 <= alpha1")],
                [_lin(e, 0, -1, "alpha2 <= (3delta-1)/2")],
                [_lin(1, -2, -1, "alpha2 <= 1-2alpha1")],
            ],
            True,
            (Fraction(1, 4), Fraction(2, 5)),
        ),
        "B": (
            [
                [_ge_a1(q, "alpha1 >= (3-3delta)/4")],
                [_le_a1(half, "alpha1 <= 1/2")],
                [_lin(0, -half, 1, "alpha2 >= alpha1/2")],
                [_lin(-1, 2, 1, "alpha2 >= 1-2alpha1")],
                [_lin(e, 0, -1, "alpha2 <= (3delta-1)/2")],
                [_lin(half, -half, -1, "alpha2 <= (1-alpha1)/2")],
            ],
            True,
            (q, half),
        ),
        "C": (
            [
                [_ge_a1(nu0, "alpha1 >= nu(0)")],
                [_le_a1(Fraction(1, 3), "alpha1 <= 1/3")],
                [NuLower(d)],
                [_lin(0, 1, -1, "alpha2 <= alpha1")],
                [third("alpha2 <= (1-alpha1)/3")],
            ],
            False,
            (nu0, Fraction(1, 3)),
        ),
        "D": (
            [
                [_ge_a1(Fraction(1, 3), "alpha1 >= 1/3")],
                [_le_a1(half, "alpha1 <= 1/2")],
                [NuLower(d)],
                [third("alpha2 <= (1-alpha1)/3"), _lin(0, half, -1, "alpha2 <= alpha1/2")],
            ],
            False,
            (Fraction(1, 3), half),
        ),
        "E": (
            [
                [_ge_a1(e, "alpha1 >= (3delta-1)/2")],
                [_le_a1(q, "alpha1 <= (3-3delta)/4")],
                [_lin(-e, 0, 1, "alpha2 >= (3delta-1)/2")],
                [_lin(0, 1, -1, "alpha2 <= alpha1")],
                [_lin(1, -2, -1, "alpha2 <= 1-2alpha1")],
            ],
            True,
            (e, q),
        ),
        "F": (
            [
                [_ge_a1(Fraction(1, 3), "alpha1 >= 1/3")],
                [_le_a1(2 - 3 * d, "alpha1 <= 2-3delta")],
                [_lin(-1, 2, 1, "alpha2 >= 1-2alpha1")],
                [_lin(-e, 0, 1, "alpha2 >= (3delta-1)/2")],
                [_lin(half, -half, -1, "alpha2 <= (1-alpha1)/2")],
            ],
            True,
            (Fraction(1, 3), 2 - 3 * d),
        ),
    }
    return {
        name: RegionSpec(name, d, tuple(tuple(c) for c in clauses), prime, rng)
        for name, (clauses, prime, rng) in specs.items()
    }


def region_membership(alpha1, alpha2, delta) -> set[str]:
    a1, a2 = as_fraction(alpha1), as_fraction(alpha2)
    return {name for name, spec in region_specs(delta).items() if spec.contains(a1, a2)}


def symmetry_map(alpha1, alpha2):
    """(alpha1, alpha2) -> (1 - alpha1 - alpha2, alpha2): swaps the roles of p1 and m."""
    return 1 - alpha1 - alpha2, alpha2


# -- vectorised exact membership ---------------------------------------------


def _atom_batch(atom: Atom, a: np.ndarray, b: np.ndarray, N: int) -> np.ndarray:
    """Sign test of an atom at alpha1 = a/N, alpha2 = b/N in exact int64 arithmetic."""
    if isinstance(atom, Linear):
        L = math.lcm(atom.c0.denominator, atom.c1.denominator, atom.c2.denominator)
        k0 = int(atom.c0 * L) * N
        k1, k2 = int(atom.c1 * L), int(atom.c2 * L)
        return (k0 + k1 * a + k2 * b) >= 0
    d = atom.delta
    # h = max(1, ceil((1/2 - a/N) / (2d - 1))) = ceil((N - 2a) dd / (2N (2dn - dd)))
    dn, dd = d.numerator, d.denominator
    num = (N - 2 * a) * dd
    den = 2 * N * (2 * dn - dd)
    h = np.maximum(1, -((-num) // den))
    # alpha2 >= 2(d - a/N)/(2h-1)  <=>  b dd (2h-1) >= 2 (dn N - a dd)
    first = b * dd * (2 * h - 1) >= 2 * (dn * N - a * dd)
    cap = nu_cap(d)
    # alpha2 >= cap  <=>  b * cap.den >= cap.num * N
    second = b * cap.denominator >= cap.numerator * N
    return first | second


def membership_batch(a: np.ndarray, b: np.ndarray, N: int, delta) -> dict[str, np.ndarray]:
    """Boolean membership arrays for the points (a/N, b/N); exact for N < 2^31."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    if N >= 2**31:
        raise ValueError("N must be below 2^31 for exact int64 evaluation")
    out = {}
    for name, spec in region_specs(delta).items():
        inside = np.ones(a.shape, dtype=bool)
        for clause in spec.clauses:
            hit = np.zeros(a.shape, dtype=bool)
            for atom in clause:
                hit |= _atom_batch(atom, a, b, N)
            inside &= hit
        out[name] = inside
    return out


# -- loss integrals ------------------------------------------------------------


def _nu_float_exact_h(a1: float, d: Fraction) -> float:
    return float(nu_clamped(Fraction(a1).limit_denominator(10**12), d))


def _alpha2_bounds(spec: RegionSpec, a1: float) -> tuple[float, float] | None:
    """[lo, hi] section of the region at alpha1 (or None if empty)."""
    lo, hi = -math.inf, math.inf
    for clause in spec.clauses:
        if len(clause) == 1:
            atom = clause[0]
            if isinstance(atom, NuLower):
                lo = max(lo, _nu_float_exact_h(a1, spec.delta))
                continue
            c0, c1, c2 = float(atom.c0), float(atom.c1), float(atom.c2)
            if c2 == 0:
                if c0 + c1 * a1 < -1e-15:
                    return None
            elif c2 > 0:
                lo = max(lo, -(c0 + c1 * a1) / c2)
            else:
                hi = min(hi, (c0 + c1 * a1) / -c2)
        else:
            # a disjunction of upper bounds: alpha2 <= max(...)
            caps = []
            for atom in clause:
                c0, c1, c2 = float(atom.c0), float(atom.c1), float(atom.c2)
                if c2 >= 0:
                    raise NotImplementedError("only disjunctions of upper bounds are supported")
                caps.append((c0 + c1 * a1) / -c2)
            hi = min(hi, max(caps))
    lo = max(lo, 0.0)
    if not lo < hi:
        return None
    return lo, hi


def _breakpoints(spec: RegionSpec) -> list[float]:
    """alpha1 values where the section's bounds can switch: pairwise line crossings and nu jumps."""
    d = spec.delta
    a_lo, a_hi = spec.alpha1_range
    lines = []  # alpha2 = m*alpha1 + c
    for clause in spec.clauses:
        for atom in clause:
            if isinstance(atom, Linear) and atom.c2 != 0:
                lines.append((-atom.c1 / atom.c2, -atom.c0 / atom.c2))
    pts = set()
    if any(isinstance(atom, NuLower) for clause in spec.clauses for atom in clause):
        cap = nu_cap(d)
        lines.append((Fraction(0), cap))
        h = 1
        while Fraction(1, 2) - (h - 1) * (2 * d - 1) > a_lo:
            lines.append((Fraction(-2, 2 * h - 1), Fraction(2, 2 * h - 1) * d))
            pts.add(Fraction(1, 2) - h * (2 * d - 1))
            h += 1
    for i, (m1, c1) in enumerate(lines):
        for m2, c2 in lines[i + 1 :]:
            if m1 != m2:
                pts.add((c2 - c1) / (m1 - m2))
    return sorted(float(p) for p in pts if a_lo < p < a_hi)


def _inner(spec: RegionSpec, a1: float) -> float:
    sec = _alpha2_bounds(spec, a1)
    if sec is None:
        return 0.0
    lo, hi = sec
    s = 1 - a1
    if spec.third_factor_prime:
        # int dalpha2 / (alpha2 (s - alpha2)) = log(alpha2 / (s - alpha2)) / s
        return (math.log(hi / (s - hi)) - math.log(lo / (s - lo))) / (a1 * s)
    # u = (s - alpha2)/alpha2 turns omega(u)/alpha2^2 dalpha2 into omega(u) du / s
    table = omega_table()
    u_hi, u_lo = (s - lo) / lo, (s - hi) / hi
    return float(table.integral(u_lo, u_hi)) / (a1 * s)


@dataclass(frozen=True)
class RegionLoss:
    name: str
    nonempty: bool
    loss: float
    abserr: float


def region_loss(region: RegionSpec | str, delta=None) -> RegionLoss:
    """Double integral of the region's density; 0 with nonempty=False for an empty region."""
    if isinstance(region, str):
        region = region_specs(delta)[region]
    a_lo, a_hi = (float(v) for v in region.alpha1_range)
    if not a_lo < a_hi:
        return RegionLoss(region.name, False, 0.0, 0.0)
    val, err = integrate.quad(
        lambda a1: _inner(region, a1), a_lo, a_hi, points=_breakpoints(region) or None,
        limit=400, epsabs=1e-9, epsrel=1e-9,
    )
    nonempty = val > 0
    return RegionLoss(region.name, nonempty, float(val), float(err))


def regions_table(delta) -> list[dict]:
    """Rows (region, nonempty, loss, paper_budget) plus group and total rows."""
    specs = region_specs(delta)
    losses = {name: region_loss(spec) for name, spec in specs.items()}
    rows = [
        {"region": n, "nonempty": losses[n].nonempty, "loss": losses[n].loss,
         "paper_budget": float(PAPER_BUDGET[n]) if n in PAPER_BUDGET else None}
        for n in NAMES
    ]
    for group in ("A+B", "E+F"):
        a, b = group.split("+")
        rows.append({"region": group, "nonempty": losses[a].nonempty or losses[b].nonempty,
                     "loss": losses[a].loss + losses[b].loss, "paper_budget": float(PAPER_BUDGET[group])})
    rows.append({"region": "total", "nonempty": any(l.nonempty for l in losses.values()),
                 "loss": sum(l.loss for l in losses.values()), "paper_budget": float(BUDGET_TOTAL)})
    return rows
