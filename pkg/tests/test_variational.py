import math
import random
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from shortgap.variational import (
    I_k, J_k_m, J_total, SimplexPoly, SymmetricPoly, VariationalResult, functional_values, gram_matrices,
    optimize_Mk, rayleigh_quotient, rho_for, rho_threshold, simplex_monomial_integral, symmetric_basis,
)


def _sympy_poly(F: SimplexPoly, ts):
    return sum(sp.Rational(c.numerator, c.denominator) * sp.prod([t**e for t, e in zip(ts, ex)])
               for ex, c in F.terms.items())


def _nested_simplex_integral(expr, ts):
    """Iterated integral over t_k in [0, 1 - t_1 - ... - t_{k-1}], ..., t_1 in [0, 1]."""
    for i in range(len(ts) - 1, -1, -1):
        expr = sp.expand(sp.integrate(sp.expand(expr), (ts[i], 0, 1 - sum(ts[:i]))))
    return expr


def _to_fraction(v) -> Fraction:
    v = sp.expand(v)
    assert v.is_Rational, v
    return Fraction(int(v.p), int(v.q))


small_polys = st.builds(
    lambda k, terms: SimplexPoly(k, {tuple(e[:k]): c for e, c in terms}),
    st.integers(1, 3),
    st.lists(st.tuples(st.lists(st.integers(0, 2), min_size=3, max_size=3),
                       st.fractions(-3, 3, max_denominator=5)), min_size=1, max_size=3),
)


def test_monomial_integral_examples():
    assert simplex_monomial_integral((0, 0)) == Fraction(1, 2)
    assert simplex_monomial_integral((1, 1)) == Fraction(1, 24)
    assert simplex_monomial_integral((2,)) == Fraction(1, 3)


def test_monomial_integral_monte_carlo():
    rng = np.random.default_rng(7)
    for _ in range(20):
        k = int(rng.integers(1, 5))
        e = rng.integers(0, 4, size=k)
        # uniform points of the simplex: first k coordinates of a flat Dirichlet in k+1 parts
        pts = rng.dirichlet(np.ones(k + 1), size=10**6)[:, :k]
        vals = np.prod(pts**e, axis=1) / math.factorial(k)
        mean, se = vals.mean(), vals.std() / math.sqrt(len(vals))
        assert abs(mean - float(simplex_monomial_integral(tuple(e)))) <= 4 * se + 1e-15


@settings(max_examples=15)
@given(small_polys)
def test_functionals_match_sympy_integration(F):
    ts = sp.symbols(f"t1:{F.k + 1}", nonnegative=True)
    f = _sympy_poly(F, ts)
    assert I_k(F) == _to_fraction(_nested_simplex_integral(sp.expand(f**2), ts))
    for m in range(1, F.k + 1):
        tm = ts[m - 1]
        others = [t for t in ts if t is not tm]
        inner = sp.integrate(f, (tm, 0, 1 - sum(others)))
        ref = _nested_simplex_integral(sp.expand(inner**2), others) if others else inner**2
        assert J_k_m(F, m) == _to_fraction(ref)


def test_functional_examples():
    one2 = SimplexPoly.constant(2)
    assert I_k(one2) == Fraction(1, 2)
    assert J_k_m(one2, 1) == Fraction(1, 3)
    assert I_k(SimplexPoly(2, {})) == 0 and J_k_m(SimplexPoly(2, {}), 2) == 0
    assert I_k(SimplexPoly.variable(1, 0)) == Fraction(1, 3)
    assert J_k_m(SimplexPoly.constant(1), 1) == 1
    with pytest.raises(ValueError):
        J_k_m(one2, 3)


@given(small_polys)
def test_I_nonnegative_and_zero_only_for_zero(F):
    v = I_k(F)
    assert v >= 0
    assert (v == 0) == F.is_zero()


def test_cauchy_schwarz_k1():
    rnd = random.Random(3)
    for _ in range(100):
        terms = {(rnd.randint(0, 6),): Fraction(rnd.randint(-9, 9), rnd.randint(1, 5)) for _ in range(4)}
        F = SimplexPoly(1, terms)
        if F.is_zero():
            continue
        assert J_k_m(F, 1) <= I_k(F)


def test_gram_matrices_match_monomial_expansion():
    k = 3
    basis = symmetric_basis(k, 3)
    I, J = gram_matrices(k, basis)
    polys = [SymmetricPoly(k, (el,), (1,)).to_simplex_poly() for el in basis]
    for i, fi in enumerate(polys):
        for j, fj in enumerate(polys):
            assert I[i][j] == (I_k(fi + fj) - I_k(fi - fj)) / 4
            assert J[i][j] == (J_total(fi + fj) - J_total(fi - fj)) / 4


def test_symmetric_poly_evaluation_matches_expansion():
    F = SymmetricPoly(3, ((0, ()), (1, (2,)), (2, (3,))), (1, Fraction(-2, 3), 5))
    G = F.to_simplex_poly()
    for t in ([0.1, 0.2, 0.3], [0.0, 0.5, 0.25], [0.6, 0.6, 0.1]):
        assert F(t) == pytest.approx(G(t), abs=1e-12)
    I_val, J_vals = functional_values(F)
    assert I_val == I_k(G) and sum(J_vals) == J_total(G)


def test_k1_is_one():
    with pytest.warns(UserWarning, match="pruned"):
        res = optimize_Mk(1, 3)
    assert res.certified == 1 and res.Mk_lower == 1.0


def test_k2_degree1_matches_hand_2x2():
    # basis {1, t1 + t2}
    f = [SimplexPoly.constant(2), SimplexPoly.power_sum(2, 1)]
    I = [[(I_k(a + b) - I_k(a - b)) / 4 for b in f] for a in f]
    J = [[(J_total(a + b) - J_total(a - b)) / 4 for b in f] for a in f]
    assert I == [[Fraction(1, 2), Fraction(1, 3)], [Fraction(1, 3), Fraction(1, 4)]]
    lam = sp.symbols("lam")
    M = sp.Matrix(2, 2, lambda i, j: sp.Rational(J[i][j].numerator, J[i][j].denominator)
                  - lam * sp.Rational(I[i][j].numerator, I[i][j].denominator))
    top = max(sp.solve(M.det(), lam), key=lambda r: float(r))
    res = optimize_Mk(2, 1)
    assert res.Mk_lower == pytest.approx(float(top), rel=1e-12)
    assert sp.Rational(res.certified.numerator, res.certified.denominator) <= top


def test_known_small_values():
    assert optimize_Mk(2, 2).Mk_lower == pytest.approx(1.385653, abs=1e-6)
    assert optimize_Mk(3, 3).Mk_lower == pytest.approx(1.64603, abs=1e-5)


def test_result_is_consistent_rayleigh_quotient():
    res = optimize_Mk(3, 3)
    F = res.to_simplex_poly()
    assert J_total(F) / I_k(F) == res.certified
    assert res.I_value == I_k(F) and sum(res.J_values) == J_total(F)
    assert abs(res.Mk_lower - float(res.certified)) <= 1e-10 * res.Mk_lower
    I, J = gram_matrices(3, list(res.basis))
    assert rayleigh_quotient(res.coefficients, I, J) == res.certified


@pytest.mark.filterwarnings("ignore:pruned .* basis elements:UserWarning")
def test_monotone_in_degree():
    for k in (2, 4, 10):
        vals = [optimize_Mk(k, d).Mk_lower for d in range(1, 6)]
        assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))


def test_invariant_under_basis_scaling():
    base = optimize_Mk(6, 4)
    n = len(base.basis)
    scale = [Fraction(3**i, 2 + i) for i in range(n)]
    scaled = optimize_Mk(6, 4, basis_scale=scale)
    assert abs(scaled.Mk_lower - base.Mk_lower) <= 1e-10 * base.Mk_lower
    ratio = [a * s / b for a, s, b in zip(scaled.coefficients, scale, base.coefficients) if b]
    assert max(ratio) / min(ratio) == pytest.approx(1.0, abs=1e-9)


def test_result_round_trip():
    res = optimize_Mk(4, 3)
    assert VariationalResult.from_dict(res.to_dict()) == res
    assert res.to_dict()["certified_quotient"] == f"{res.certified.numerator}/{res.certified.denominator}"


def test_rho_threshold_examples():
    th = rho_threshold(1, Fraction(1, 1000), Fraction(94, 100), 100)
    assert th.m == 1 and th.value == Fraction(357, 250) and th.conclusive
    assert rho_threshold("0.525", Fraction(1, 10**9), "0.94", 50).m == 0
    assert rho_threshold("0.525", 0, "0.94", 50).m == -1
    beta1 = rho_threshold("0.8", "1e-3", 1, 50)
    assert beta1.m == -1 and not beta1.conclusive
    with pytest.raises(ValueError):
        rho_threshold("0.5", "1e-3", "0.94", 10)
    with pytest.raises(ValueError):
        rho_threshold("0.6", "1e-3", "0.94", 0)


@given(st.fractions(Fraction(525, 1000), 1, max_denominator=1000), st.fractions(0, Fraction(1, 100), max_denominator=10**4),
       st.fractions(0, Fraction(99, 100), max_denominator=100), st.fractions(Fraction(1, 10), 1000, max_denominator=1000))
def test_rho_threshold_matches_sympy(delta, eps0, beta, Mk):
    R = lambda f: sp.Rational(f.numerator, f.denominator)  # noqa: E731
    ref = sp.ceiling((R(delta) - sp.Rational(525, 1000) + R(eps0)) / 2 * (1 - R(beta)) * R(Mk)) - 1
    assert rho_threshold(delta, eps0, beta, Mk).m == int(ref)


def test_rho_for():
    assert rho_for(3) == Fraction(7, 2) and math.floor(rho_for(3)) == 3
