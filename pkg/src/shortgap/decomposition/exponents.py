"""Exponent bookkeeping: alpha', h(alpha), alpha*, nu(alpha) and the lemma hypotheses.

Every quantity is an exponent of x and is handled as an exact Fraction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from fractions import Fraction

from ..tuples import as_fraction

HALF = Fraction(1, 2)


def alpha_prime(alpha, delta, theta) -> Fraction:
    """max(alpha, theta + 1 - delta)."""
    alpha, delta, theta = (as_fraction(v) for v in (alpha, delta, theta))
    return max(alpha, theta + 1 - delta)


def h_index(alpha, delta) -> int:
    """ceil((1/2 - alpha) / (2 delta - 1))."""
    alpha, delta = as_fraction(alpha), as_fraction(delta)
    return math.ceil((HALF - alpha) / (2 * delta - 1))


def _alpha_star(alpha: Fraction, delta: Fraction, h: int) -> Fraction:
    return max((2 * h * (1 - delta) - alpha) / (2 * h - 1), (2 * (h - 1) * delta + alpha) / (2 * h - 1))


def _nu(alpha: Fraction, delta: Fraction, h: int) -> Fraction:
    return min(Fraction(2, 2 * h - 1) * (delta - alpha), (36 * delta - 17) / 19)


def nu_cap(delta) -> Fraction:
    """(36 delta - 17) / 19, the ceiling on nu."""
    return (36 * as_fraction(delta) - 17) / 19


def exponent_formulas(alpha, delta, theta) -> tuple[int, Fraction, Fraction, Fraction]:
    """(h, alpha*, nu, alpha') for 0 <= alpha < 1/2 and delta > 1/2."""
    alpha, delta, theta = (as_fraction(v) for v in (alpha, delta, theta))
    if not 0 <= alpha < HALF:
        raise ValueError(f"alpha={alpha} outside [0, 1/2): h would be {h_index(alpha, delta) if delta > HALF else '?'}")
    if delta <= HALF:
        raise ValueError("delta must exceed 1/2")
    h = h_index(alpha, delta)
    return h, _alpha_star(alpha, delta, h), _nu(alpha, delta, h), alpha_prime(alpha, delta, theta)


def nu_clamped(alpha, delta) -> Fraction:
    """nu(alpha) with h clamped to >= 1, so alpha >= 1/2 falls in the h = 1 branch."""
    alpha, delta = as_fraction(alpha), as_fraction(delta)
    return _nu(alpha, delta, max(1, h_index(alpha, delta)))


def nu_float(alpha: float, delta: float) -> float:
    """Double-precision nu(alpha) with the same h >= 1 clamp."""
    h = max(1, math.ceil((0.5 - alpha) / (2 * delta - 1)))
    return min(2.0 / (2 * h - 1) * (delta - alpha), (36 * delta - 17) / 19)


@dataclass(frozen=True)
class ExponentPoint:
    """A point in exponent space; unset symbols are None."""

    delta: Fraction
    theta: Fraction = Fraction(0)
    alpha: Fraction | None = None
    alpha1: Fraction | None = None
    alpha2: Fraction | None = None
    beta: Fraction | None = None
    beta1: Fraction | None = None
    beta2: Fraction | None = None
    gamma: Fraction | None = None
    eps: Fraction = Fraction(0)
    l_factor: bool = False

    def __post_init__(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name != "l_factor" and v is not None:
                object.__setattr__(self, f.name, as_fraction(v))
        if not Fraction(524, 1000) < self.delta <= 1:
            raise ValueError(f"delta={self.delta} outside (0.524, 1]")
        if self.theta < 0:
            raise ValueError("theta must be >= 0")
        for name in ("alpha", "alpha1", "alpha2", "beta", "beta1", "beta2", "gamma"):
            v = getattr(self, name)
            if v is not None and not 0 <= v <= 1:
                raise ValueError(f"{name}={v} outside [0, 1]")

    def need(self, name: str) -> Fraction:
        v = getattr(self, name)
        if v is None:
            raise ValueError(f"exponent point is missing {name}")
        return v

    @property
    def alpha_prime(self) -> Fraction:
        return alpha_prime(self.need("alpha"), self.delta, self.theta)

    @property
    def h_index(self) -> int:
        return h_index(self.need("alpha"), self.delta)

    @property
    def alpha_star(self) -> Fraction:
        return exponent_formulas(self.need("alpha"), self.delta, self.theta)[1]

    @property
    def nu(self) -> Fraction:
        return exponent_formulas(self.need("alpha"), self.delta, self.theta)[2]


def _factor_pair_conditions(pt: ExponentPoint) -> dict[str, bool]:
    a, b1, b2 = pt.need("alpha"), pt.need("beta1"), pt.need("beta2")
    d, t = pt.delta, pt.theta
    ap = pt.alpha_prime
    return {
        "alpha <= delta + theta": a <= d + t,
        "alpha' + beta1 + beta2/2 <= (1+delta)/2 + 3theta/2": ap + b1 + b2 / 2 <= (1 + d) / 2 + 3 * t / 2,
        "alpha' + beta2 <= (1+3delta)/4 + theta": ap + b2 <= (1 + 3 * d) / 4 + t,
        "alpha' + beta1 + 3beta2/2 <= (3+delta)/4 + 3theta/2": ap + b1 + 3 * b2 / 2 <= (3 + d) / 4 + 3 * t / 2,
    }


def _l_factor_conditions(pt: ExponentPoint) -> dict[str, bool]:
    a, b1, b2 = pt.need("alpha"), pt.need("beta1"), pt.need("beta2")
    d, t = pt.delta, pt.theta
    ap = pt.alpha_prime
    return {
        "alpha <= delta + theta": a <= d + t,
        "beta1 <= theta/2 + (1-delta)/2 or N1 is an L-factor": pt.l_factor or b1 <= t / 2 + (1 - d) / 2,
        "beta2 <= (1+3delta)/8 - alpha'/2 + theta/2": b2 <= (1 + 3 * d) / 8 - ap / 2 + t / 2,
    }


def _single_factor_conditions(pt: ExponentPoint) -> dict[str, bool]:
    a, b = pt.need("alpha"), pt.need("beta")
    d, t = pt.delta, pt.theta
    ap = pt.alpha_prime
    bound = min((3 * d + 1 - 4 * ap) / 2 + 2 * t, (3 + d - 4 * ap) / 5 + Fraction(6, 5) * t)
    return {"alpha <= delta + theta": a <= d + t, "beta <= min(...)": b <= bound}


def _alpha_star_conditions(pt: ExponentPoint) -> dict[str, bool]:
    b = pt.need("beta")
    d, e = pt.delta, pt.eps
    _, a_star, _, _ = exponent_formulas(pt.need("alpha"), d, pt.theta)
    bound = min((3 * d + 1 - 4 * a_star) / 2, (3 + d - 4 * a_star) / 5) - 2 * e
    return {"0 <= beta <= min(...) - 2eps": 0 <= b <= bound}


def _three_factor_conditions(pt: ExponentPoint) -> dict[str, bool]:
    a, b, g = pt.need("alpha"), pt.need("beta"), pt.need("gamma")
    d, t, e = pt.delta, pt.theta, pt.eps
    out = {"alpha <= 1/2": a <= HALF}
    if a >= HALF:
        # alpha* is undefined at alpha = 1/2; the lemma does not apply
        out.update({"(i)": False, "(ii)": False})
        return out
    _, a_star, _, _ = exponent_formulas(a, d, t)
    i1 = 2 * b + g <= 1 + d - 2 * a_star - 2 * e
    i2 = g <= (1 + 3 * d) / 4 - a_star - e
    i3 = 2 * b + 3 * g <= (3 + d) / 2 - 2 * a_star - 2 * e
    ii1 = b <= (1 - t) / 2
    ii2 = g <= (1 + 3 * t - 4 * a_star) / 8 - e
    out.update({
        "(i) 2beta + gamma <= 1 + delta - 2alpha* - 2eps": i1,
        "(i) gamma <= (1+3delta)/4 - alpha* - eps": i2,
        "(i) 2beta + 3gamma <= (3+delta)/2 - 2alpha* - 2eps": i3,
        "(ii) beta <= (1-theta)/2": ii1,
        "(ii) gamma <= (1+3theta-4alpha*)/8 - eps": ii2,
        "(i)": i1 and i2 and i3,
        "(ii)": ii1 and ii2,
    })
    return out


CHECKERS = {
    "5.4": _factor_pair_conditions,
    "5.5": _l_factor_conditions,
    "5.6": _single_factor_conditions,
    "5.9": _alpha_star_conditions,
    "5.10": _three_factor_conditions,
}


def check_conditions(point: ExponentPoint, lemma: str) -> dict[str, bool]:
    """Each displayed hypothesis of the chosen lemma, evaluated exactly."""
    try:
        fn = CHECKERS[str(lemma)]
    except KeyError:
        raise ValueError(f"unknown lemma {lemma!r}; choose from {sorted(CHECKERS)}") from None
    return fn(point)


def conditions_hold(point: ExponentPoint, lemma: str) -> bool:
    res = check_conditions(point, lemma)
    if str(lemma) == "5.10":
        return res["alpha <= 1/2"] and (res["(i)"] or res["(ii)"])
    return all(res.values())
