"""Regenerate the frozen regression baselines in this directory.

Run from the repository root: ``python tests/golden/generate.py``.  Each file
records how its numbers were produced; tests compare against them.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

from shortgap import __version__
from shortgap.decomposition.regions import regions_table
from shortgap.sums import S1, S2, error_scan
from shortgap.tuples import AdmissibleTuple, make_context, rational_power_floor
from shortgap.variational import SimplexPoly
from shortgap.weights import build_lambda, build_y

HERE = Path(__file__).parent


def s1_context():
    return make_context(200000, Fraction(94, 100), None, forms=AdmissibleTuple.from_offsets([0, 2]),
                        R=20, d0_floor=5, h=100000)


def s1_functions():
    one = SimplexPoly.constant(2)
    return {"F=1": one, "F=1-P1": one - SimplexPoly.power_sum(2, 1)}


def s1_baseline() -> dict:
    ctx = s1_context()
    rows = {}
    for name, F in s1_functions().items():
        lam = build_lambda(build_y(F, ctx))
        s1, s2 = S1(ctx.interval, ctx, lam), S2(ctx.interval, ctx, lam)
        rows[name] = {"S1": s1.value, "S1_ratio": s1.ratio, "S2": s2.value, "S2_over_S1": s2.value / s1.value}
    return {
        "provenance": "first full run of S1/S2 on (1e5, 2e5], tuple {0,2}, D0=5 (W=30), R=20; "
                      f"shortgap {__version__}",
        "rows": rows,
    }


def error_scan_baseline() -> dict:
    x = 10**8
    z = rational_power_floor(x, Fraction(3, 5))
    rep = error_scan(x, z, 30)
    return {
        "provenance": f"first full run of error_scan(x=1e8, z=floor(x^0.6), Q=30), prime mode; shortgap {__version__}",
        "x": x, "z": z, "Q": 30, "total": rep.total, "main_scale": rep.main_scale, "normalized": rep.normalized,
    }


def regions_baseline() -> dict:
    return {
        "provenance": f"regions_table(0.525), exact membership and trapezoid loss integrals; shortgap {__version__}",
        "delta": "0.525",
        "rows": regions_table(Fraction(525, 1000)),
    }


def main():
    for name, fn in (("s1_baseline.json", s1_baseline), ("error_scan.json", error_scan_baseline),
                     ("regions.json", regions_baseline)):
        (HERE / name).write_text(json.dumps(fn(), indent=2, sort_keys=True, default=str) + "\n")
        print("wrote", name)


if __name__ == "__main__":
    main()
