"""Strong series arithmetic, cell preparation and pullbacks."""
import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pcmellin.cells import Cell1D, monomial_rescale, prepare_pattern, pullback
from pcmellin.errors import MellinError, UnsupportedPattern
from pcmellin.integrate import integrate_1var
from pcmellin.oracle import quad_cell
from pcmellin.scalars import EC, MeroFunction
from pcmellin.series import (Coef, flat_evaluate, from_dict, lift, nested_presentation, series_add,
                             series_mul, unit_power)
from pcmellin.xexpr import X_ZERO, abs_, add, const, div, log_, mul, pow_, sub, var

x, y = var("x"), var("y")
BASES = (div(const(1), y),)                 # t = 1/y

small = st.fractions(min_value=-F(1, 2), max_value=F(1, 2), max_denominator=8)


def _table(coeffs):
    return {(k,): c for k, c in enumerate(coeffs) if c != 0}


def _poly_at(coeffs, t):
    return sum(float(c) * t ** k for k, c in enumerate(coeffs))


@settings(max_examples=40)
@given(st.lists(small, min_size=1, max_size=5), st.lists(small, min_size=1, max_size=5),
       st.floats(2.0, 10.0))
def test_series_mul_and_add_evaluate_pointwise(p, q, y0):
    P = from_dict(1, BASES, _table(p), M=20)
    Q = from_dict(1, BASES, _table(q), M=20)
    env = {"y": y0}
    prod, _ = series_mul(P, Q).evaluate(0.3, env)
    tot, _ = series_add(P, Q).evaluate(0.3, env)
    assert prod == pytest.approx(_poly_at(p, 1 / y0) * _poly_at(q, 1 / y0), abs=1e-12)
    assert tot == pytest.approx(_poly_at(p, 1 / y0) + _poly_at(q, 1 / y0), abs=1e-12)


@settings(max_examples=30)
@given(st.lists(small, min_size=1, max_size=4), st.integers(2, 4), st.floats(1.5, 8.0))
def test_lift_keeps_the_value(p, D, y0):
    P = from_dict(1, BASES, _table(p), M=12)
    v1, _ = P.evaluate(0.0, {"y": y0})
    v2, _ = lift(P, D).evaluate(0.0, {"y": y0})
    assert v2 == pytest.approx(v1, abs=1e-12)


@pytest.mark.parametrize("s", [0.5, -1.3 + 0.7j, 2.0 - 1.0j])
def test_unit_power_matches_direct_power(s):
    U = from_dict(1, BASES, {(0,): 1, (1,): F(1, 4)}, M=60)
    V = unit_power(U, "s")
    for y0 in (1.0, 2.5, 9.0):
        v, tail = V.evaluate(s, {"y": y0})
        assert v == pytest.approx((1 + 0.25 / y0) ** s, rel=1e-12)
        assert abs(v - (1 + 0.25 / y0) ** s) <= tail + 1e-14 and tail < 1e-8


def test_nested_presentation_matches_flat_sum():
    c = (div(x, 4),)
    gamma = (div(const(1), y),)
    xi = {((i,), (j,)): MeroFunction.linear_inv(1, i + j + 1) for i in range(5) for j in range(5)}
    S = nested_presentation(xi, c, gamma, M=10)
    env = {"x": 0.7, "y": 3.0}
    for s in (0.5, 1.5 + 1j):
        v, _ = S.evaluate(s, env)
        assert v == pytest.approx(flat_evaluate(xi, c, gamma, 1, s, env), rel=1e-12)


def test_coef_folds_constants():
    c = Coef.of(MeroFunction.const(2), mul(3, x)) + Coef.of(MeroFunction.const(-6), x)
    assert c.is_zero()


# --- cell preparation -------------------------------------------------------------

A_X = add(1, div(x, 2))
B_X = add(2, x)
BOX = (("x", 0, 1),)

CASES = [
    ("origin", Cell1D(X_ZERO, A_X, box=BOX),
     mul(A_X, B_X, pow_(sub(mul(A_X, B_X), y), -1))),
    ("unbounded", Cell1D(A_X, None, box=BOX),
     mul(pow_(y, -2, 1), pow_(add(1, div(A_X, mul(B_X, y))), 0, 1))),
    ("bounded", Cell1D(A_X, add(3, x), box=BOX),
     mul(pow_(y, 0, 1), log_(y), pow_(sub(1, div(y, mul(2, add(3, x)))), -1),
         pow_(sub(1, div(A_X, mul(4, y))), F(1, 2)))),
]


@pytest.mark.parametrize("name,cell,expr", CASES, ids=[c[0] for c in CASES])
def test_prepared_generators_reproduce_the_integrand(name, cell, expr):
    gens = prepare_pattern(expr, cell, M=80)
    for x0 in (0.1, 0.8):
        env = {"x": x0}
        a, b = cell.endpoints(env)
        hi = b if math.isfinite(b) else 4 * a
        for y0 in np.linspace(a if a > 0 else hi / 50, hi, 7)[1:-1]:
            for s in (0.4, -0.6 + 1.1j):
                got = sum(g.evaluate(s, env, y0) for g in gens)
                want = expr.evaluate(dict(env, y=y0), s)
                assert got == pytest.approx(want, rel=1e-10)


def test_unsupported_factor_is_reported():
    cell = Cell1D(const(1), None, box=BOX)
    with pytest.raises(UnsupportedPattern) as ei:
        prepare_pattern(abs_(sub(y, 2)), cell)
    assert "abs(y-2)" in str(ei.value.subterm)


def test_cell_certification():
    assert Cell1D(A_X, add(3, x), box=BOX).certify()
    assert Cell1D(X_ZERO, A_X, box=BOX).certify()


def test_monomial_rescale_bounds():
    cell = Cell1D(A_X, add(3, x), box=BOX)
    out = monomial_rescale([(const(F(1, 4)), 1, 1), (const(F(1, 2)), -1, 1), (const(1), 0, 1)], cell)
    assert [o["J"] for o in out] == [">", "<", "="]
    with pytest.raises(MellinError):
        monomial_rescale([(const(1), 1, 1)], cell)


@pytest.mark.parametrize("kind", ["unbounded", "bounded", "origin"])
def test_inversion_pullback_preserves_the_integral(kind):
    """int_A T = -int_B (T o inv) * (-y^-2) for the inversion y -> 1/y."""
    cells = {"unbounded": Cell1D(A_X, None, box=BOX),
             "bounded": Cell1D(A_X, add(3, x), box=BOX),
             "origin": Cell1D(X_ZERO, A_X, box=BOX)}
    exprs = {"unbounded": mul(pow_(y, -3), log_(y), pow_(add(1, div(A_X, mul(2, y))), -1)),
             "bounded": mul(pow_(y, F(1, 2)), pow_(sub(1, div(A_X, mul(2, y))), -1)),
             "origin": mul(pow_(y, F(-1, 2)), log_(y), pow_(sub(1, div(y, mul(2, A_X))), -1))}
    cell = cells[kind]
    gens = prepare_pattern(exprs[kind], cell, M=80)
    pulled = [pullback(g, tau=-1) for g in gens]
    env = {"x": 0.3}
    s = 0.0
    lhs = quad_cell(gens, s, env).value
    rhs = -quad_cell(pulled, s, env).value
    assert rhs == pytest.approx(lhs, rel=1e-8)
    # and the closed forms agree
    r1 = integrate_1var([(cell, gens)], with_locus=False)
    r2 = integrate_1var([(pulled[0].cell, pulled)], with_locus=False)
    assert -r2.evaluate(s, env)[0] == pytest.approx(r1.evaluate(s, env)[0], rel=1e-8)
    assert r1.evaluate(s, env)[0] == pytest.approx(lhs, rel=1e-8)
