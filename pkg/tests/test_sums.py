import json
import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from reference import is_prime_td
from shortgap import oracles
from shortgap.primes import Interval, count_primes
from shortgap.sums import (
    S1, S1_p_j, S2, S2_m, S_minus, chain_identity, count_S_H, error_scan, z0_of,
)
from shortgap.tuples import AdmissibleTuple, make_context
from shortgap.variational import SimplexPoly, optimize_Mk
from shortgap.weights import build_lambda, build_y

REL = 1e-9

# short random intervals are expected to trip the W >= length warning
pytestmark = pytest.mark.filterwarnings("ignore:W=.*interval length:UserWarning")


def close(a, b):
    return abs(a - b) <= REL * max(1.0, abs(b))


def _k1_case():
    ctx = make_context(36, 1, None, forms=AdmissibleTuple.from_offsets([0]), R=8, d0_floor=3, h=36)
    return ctx, build_lambda(build_y(SimplexPoly.constant(1), ctx))


def _k2_case(c1=Fraction(3, 10)):
    ctx = make_context(200000, Fraction(94, 100), None, forms=AdmissibleTuple.from_offsets([0, 2]),
                       R=25, d0_floor=5, h=100000, c1=c1)
    F = optimize_Mk(2, 2).to_symmetric_poly()
    return ctx, build_lambda(build_y(F, ctx))


K1 = _k1_case()
K2 = _k2_case()


def test_k1_example_is_six_terms():
    ctx, lam = K1
    assert (ctx.W, ctx.v0) == (6, 1)
    rep = S1(ctx.interval, ctx, lam)
    assert rep.n_count == 6
    direct = math.fsum(oracles.weight(n, ctx.forms, lam) for n in (1, 7, 13, 19, 25, 31))
    assert rep.value == direct == oracles.S1(ctx.interval, ctx, lam)
    s2 = S2_m(ctx.interval, ctx, lam, 1)
    primes = [n for n in (1, 7, 13, 19, 25, 31) if is_prime_td(n)]
    assert s2.value == pytest.approx(math.fsum(oracles.weight(n, ctx.forms, lam) for n in primes), rel=REL)


def test_short_interval_is_flagged():
    ctx, lam = K2
    with pytest.warns(UserWarning, match="interval length"):
        rep = S1(Interval(100000, 100020), ctx, lam)
    assert rep.flags == ["W>=interval"]


def test_zero_F_gives_zero():
    ctx, _ = K2
    lam = build_lambda(build_y(SimplexPoly(2, {}), ctx))
    assert S1(ctx.interval, ctx, lam).value == 0
    assert S2(ctx.interval, ctx, lam).value == 0


@settings(max_examples=25)
@given(st.integers(100000, 199000), st.integers(0, 1000))
def test_table_sums_match_oracles(lo, length):
    ctx, lam = K2
    iv = Interval(lo, lo + length)
    assert close(S1(iv, ctx, lam).value, oracles.S1(iv, ctx, lam))
    for m in (1, 2):
        assert close(S2_m(iv, ctx, lam, m).value, oracles.S2_m(iv, ctx, lam, m))
    assert close(S1_p_j(iv, ctx, lam, 7, 2), oracles.S1_p_j(iv, ctx, lam, 7, 2))
    for which in ("S1-", "S2-"):
        assert close(S_minus(iv, ctx, lam, which), oracles.S_minus(iv, ctx, lam, which))


def test_full_interval_matches_oracles():
    ctx, lam = K2
    iv = ctx.interval
    assert close(S1(iv, ctx, lam).value, oracles.S1(iv, ctx, lam))
    assert close(S2(iv, ctx, lam).value, oracles.S2(iv, ctx, lam))
    assert close(S1_p_j(Interval(0, 10**4), ctx, lam, 7, 1), oracles.S1_p_j(Interval(0, 10**4), ctx, lam, 7, 1))


def test_restricted_dm_matches_restricted_table():
    ctx, lam = K2
    iv = Interval(150000, 160000)
    got = S2_m(iv, ctx, lam, 1, restrict_dm=True).value
    # w'(n): same square but over entries with d_1 = 1
    from shortgap.weights import WeightTable
    sub = WeightTable(lam.k, lam.W, lam.R, {d: v for d, v in lam.entries.items() if d[0] == 1})
    assert close(got, oracles.S2_m(iv, ctx, sub, 1))


@settings(max_examples=20)
@given(st.integers(100000, 190000), st.integers(0, 5000), st.integers(0, 5000))
def test_additive_and_positive(a, l1, l2):
    ctx, lam = K2
    b, c = a + l1, a + l1 + l2
    whole = S1(Interval(a, c), ctx, lam).value
    parts = S1(Interval(a, b), ctx, lam).value + S1(Interval(b, c), ctx, lam).value
    assert whole == pytest.approx(parts, rel=1e-12, abs=1e-9)
    assert whole >= 0 and S2(Interval(a, c), ctx, lam).value >= 0


def test_pointwise_bounds():
    ctx, lam = K2
    iv = ctx.interval
    s1, s2 = S1(iv, ctx, lam).value, S2(iv, ctx, lam).value
    assert s2 <= ctx.k * s1
    s1m, s2m = S_minus(iv, ctx, lam, "S1-"), S_minus(iv, ctx, lam, "S2-")
    assert 0 <= s2m <= ctx.k * s1m <= ctx.k * s1
    for p in (7, 11, 13, 101):
        assert 0 <= S1_p_j(iv, ctx, lam, p, 1) <= s1


def test_s1pj_domain():
    ctx, lam = K2
    with pytest.raises(ValueError):
        S1_p_j(ctx.interval, ctx, lam, 5, 1)
    with pytest.raises(ValueError):
        S1_p_j(ctx.interval, ctx, lam, 9, 1)
    with pytest.raises(ValueError):
        S1_p_j(ctx.interval, ctx, lam, 7, 3)
    # 10^6 + 3 divides no L_j(n) for n below it
    assert S1_p_j(Interval(100000, 100100), ctx, lam, 1000003, 1) == 0


def test_c1_zero_gives_empty_minus_sums():
    ctx, lam = _k2_case(c1=0)
    assert S_minus(ctx.interval, ctx, lam, "S1-") == 0
    assert S_minus(ctx.interval, ctx, lam, "S2-") == 0
    with pytest.raises(ValueError):
        S_minus(ctx.interval, ctx, lam, "S3-")


@pytest.mark.parametrize("rho", [0.5, 1.5, Fraction(7, 2)])
def test_chain_identity(rho):
    ctx, lam = K2
    chk = chain_identity(Interval(100000, 150000), ctx, lam, rho)
    assert chk.ok


def test_count_S_H_twins():
    t = AdmissibleTuple.from_offsets([0, 2])
    ctx = make_context(200, 1, None, forms=t, R=10, c1=Fraction(1, 100))
    assert count_S_H(Interval(100, 200), t, ctx, 1) == 7
    assert count_S_H(Interval(150, 150), t, ctx, 1) == 0
    assert count_S_H(Interval(100, 200), t, ctx, 1) == oracles.count_S_H(Interval(100, 200), ctx, 1)
    with pytest.raises(ValueError):
        count_S_H(Interval(100, 200), t, ctx, 0)


def test_count_S_H_monotone_in_m():
    t = AdmissibleTuple.from_offsets([0, 2, 6])
    ctx = make_context(10**5, 1, None, forms=t, R=10, c1=Fraction(1, 10))
    iv = Interval(0, 10**5)
    counts = [count_S_H(iv, t, ctx, m) for m in (1, 2)]
    assert counts[0] >= counts[1] > 0
    assert counts == [oracles.count_S_H(iv, ctx, m) for m in (1, 2)]


def test_error_scan_q1_is_two_prime_counts():
    x, z = 10**6, 10**4
    rep = error_scan(x, z, 1)
    z0 = z0_of(x)
    assert z0 == math.floor(x * math.exp(-3 * math.log(x) ** (1 / 3)))
    best = 0.0
    for y in rep.y_grid:
        base = count_primes(Interval(y - z0, y))
        for h in rep.h_grid:
            best = max(best, abs(count_primes(Interval(y - h, y)) - h / z0 * base))
    assert rep.per_q[1] == pytest.approx(best, rel=1e-12)
    assert len(rep.h_grid) == 8 and len(rep.y_grid) == 4
    assert min(rep.h_grid) >= z // 4 and max(rep.h_grid) <= z
    assert all(x // 2 <= y < x for y in rep.y_grid)


def test_error_scan_zero_mode_and_coprime_residues():
    assert error_scan(10**6, 10**4, 12, mode="zero").total == 0
    rep = error_scan(10**6, 10**4, 12)
    assert all(math.gcd(rep.argmax[q]["a"], q) == 1 for q in rep.per_q)
    assert rep.total == pytest.approx(math.fsum(rep.per_q.values()))
    with pytest.raises(ValueError):
        error_scan(10, 11, 3)
    with pytest.raises(ValueError):
        error_scan(10**6, 10, 0)


def test_s1_baseline_regression(golden_dir):
    import golden.generate as gen
    ref = json.loads((golden_dir / "s1_baseline.json").read_text())["rows"]
    ctx = gen.s1_context()
    for name, F in gen.s1_functions().items():
        lam = build_lambda(build_y(F, ctx))
        s1, s2 = S1(ctx.interval, ctx, lam), S2(ctx.interval, ctx, lam)
        assert s1.value == pytest.approx(ref[name]["S1"], rel=REL)
        assert s1.ratio == pytest.approx(ref[name]["S1_ratio"], rel=REL)
        assert s2.value == pytest.approx(ref[name]["S2"], rel=REL)
        assert s2.value / s1.value <= ctx.k
