"""Prime counts and close prime pairs in intervals (x - x^delta, x]."""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

from ..primes import Interval, count_primes, default_workers, scan_gap_pairs
from ..tuples import (
    AdmissibleTuple, as_fraction, as_integer, is_admissible, rational_power_floor, singular_series,
)
from .config import DELTA_MIN, X_MAX, ConfigError

HL_CUTOFF = 10**5

PNT_COLUMNS = ["x", "delta", "h", "count", "ratio"]
DENSITY_COLUMNS = ["x", "delta", "d", "h", "pair_count", "normalized", "hl_prediction", "pair_over_prediction"]


def _ordered_map(fn, items: list):
    """Map over grid points in parallel; results stay in grid order."""
    workers = default_workers()
    if workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(it) for it in items]


def _window(x, delta) -> tuple[int, Fraction, int]:
    x, delta = as_integer(x), as_fraction(delta)
    if not 2 <= x <= X_MAX:
        raise ConfigError(f"x={x} outside [2, 10^12]")
    if not DELTA_MIN <= delta <= 1:
        raise ConfigError(f"delta={delta} outside [0.525, 1]")
    h = rational_power_floor(x, delta)
    if h > x:
        raise ConfigError(f"h={h} exceeds x={x}")
    return x, delta, h


def pnt_row(x, delta) -> dict:
    x, delta, h = _window(x, delta)
    count = count_primes(Interval(x - h, x))
    return {"x": x, "delta": float(delta), "h": h, "count": count, "ratio": count * math.log(x) / h}


def experiment_short_interval_pnt(grid) -> list[dict]:
    """Rows (x, delta, h = floor(x^delta), count, count log x / h) for (x, delta) pairs."""
    points = [_window(x, d) for x, d in grid]
    return _ordered_map(lambda p: pnt_row(p[0], p[1]), points)


def hl_gap_prediction(x: int, h: int, d: int, cutoff: int = HL_CUTOFF) -> float:
    """Expected consecutive prime pairs with gap <= d among h integers near x.

    For each even g <= d the pattern {0, g} with no prime strictly between is
    counted by inclusion-exclusion over interior offsets S:
    sum_S (-1)^|S| G({0, g} + S) h / (log x)^(2 + |S|).
    """
    logx = math.log(x)
    total = []
    for g in range(2, d + 1, 2):
        interior = range(2, g, 2)  # odd interior offsets make the tuple inadmissible mod 2
        for r in range(len(interior) + 1):
            for S in itertools.combinations(interior, r):
                t = AdmissibleTuple.from_offsets((0, *S, g))
                if not is_admissible(t)[0]:
                    continue
                ss = singular_series(t, cutoff)
                if ss.admissible and ss.value:
                    total.append((-1) ** r * ss.value * h / logx ** (2 + r))
    return math.fsum(total)


def density_row(x, delta, d: int) -> dict:
    x, delta, h = _window(x, delta)
    if d < 2 or d % 2:
        raise ConfigError(f"gap bound d={d} must be even and >= 2")
    pairs = len(scan_gap_pairs(Interval(x - h, x), d))
    pred = hl_gap_prediction(x, h, d)
    return {
        "x": x, "delta": float(delta), "d": d, "h": h, "pair_count": pairs,
        "normalized": pairs * math.log(x) ** 2 / h, "hl_prediction": pred,
        "pair_over_prediction": pairs / pred if pred > 0 else 0.0,
    }


def experiment_density(grid) -> list[dict]:
    """Rows for (x, delta, d) triples: consecutive prime pairs with gap <= d in (x - h, x]."""
    points = []
    for x, delta, d in grid:
        x, delta, _ = _window(x, delta)
        d = int(d)
        if d < 2 or d % 2:
            raise ConfigError(f"gap bound d={d} must be even and >= 2")
        points.append((x, delta, d))
    return _ordered_map(lambda p: density_row(*p), points)
