"""Closed-form integration against quadrature of the raw integrand."""
import cmath
import math
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pcmellin.cells import Cell1D, prepare_pattern
from pcmellin.cli import dumps
from pcmellin.errors import CollisionError, FragmentEscape
from pcmellin.grids import collision_set
from pcmellin.integrate import (antiderivative, antiderivative_coeffs,
                                asymptotic_expansion, asymptotic_partial_sum, eval_terms,
                                integrate_1var, integrate_multi, integrate_pattern, mellin_pattern,
                                regroup_puiseux)
from pcmellin.oracle import estimate_decay, mero_limit, quad_function
from pcmellin.scalars import EC, ExpCoeff
from pcmellin.xexpr import X_ZERO, add, const, div, log_, mul, pow_, sub, var

x, y = var("x"), var("y")
A_X = add(1, div(x, 2))
B_X = add(3, x)
BOX = (("x", 0, 1),)
ORIGIN = Cell1D(X_ZERO, A_X, box=BOX)
BOUNDED = Cell1D(A_X, B_X, box=BOX)
UNBOUNDED = Cell1D(A_X, None, box=BOX)


def raw_quad(expr, cell, s, env):
    """Quadrature of expr itself (no series, no generators)."""
    f = lambda t: np.asarray(expr.evaluate(dict(env, y=t), s), dtype=complex)
    a, b = cell.endpoints(env)
    if cell.unbounded:
        return quad_function(f, a, math.inf, 1e-11, decay=estimate_decay(f, +1)).value
    if cell.at_origin:
        return quad_function(f, 0.0, b, 1e-11, decay0=estimate_decay(f, -1)).value
    return quad_function(f, a, b, 1e-12).value


def test_antiderivative_coefficients():
    assert antiderivative_coeffs(0, 1) == [1]
    assert antiderivative_coeffs(1, 1) == [-1, 1]
    assert antiderivative_coeffs(2, 3) == [2 * 27, -2 * 9, 3]


@settings(max_examples=60, deadline=None)
@given(st.fractions(-4, 4, max_denominator=3), st.fractions(-4, 4, max_denominator=3),
       st.integers(1, 4), st.integers(0, 3),
       st.complex_numbers(max_magnitude=2, allow_nan=False, allow_infinity=False),
       st.floats(1.3, 5.0))
def test_antiderivative_differentiates_back(ell, gamma, d, mu, s, y0):
    lam = complex(ell) * s + complex(gamma) + d
    if abs(lam) < 0.25:
        return
    h = 1e-4 * y0
    Fy = lambda t: sum(float(c) * math.log(t) ** i * cmath.exp(lam / d * math.log(t)) / lam ** p
                       for c, i, _, _, p in antiderivative(ell, gamma, d, mu))
    deriv = (Fy(y0 + h) - Fy(y0 - h)) / (2 * h)
    target = cmath.exp((lam - d) / d * math.log(y0)) * math.log(y0) ** mu
    assert abs(deriv - target) <= 1e-6 * abs(target)


INTEGRANDS = [
    ("origin-log", ORIGIN, mul(pow_(y, F(-1, 3)), log_(y), pow_(sub(1, div(y, mul(3, A_X))), -2)), 0),
    ("origin-puiseux", ORIGIN, mul(pow_(y, F(1, 2)), pow_(sub(1, div(y, mul(3, A_X))), F(1, 3))), 0),
    ("bounded-int-eta", BOUNDED, mul(pow_(y, -1), pow_(sub(1, div(y, mul(2, B_X))), -1)), 0),
    ("bounded-two-sided", BOUNDED,
     mul(pow_(y, -2), log_(y), pow_(sub(1, div(A_X, mul(3, y))), -1),
         pow_(sub(1, div(y, mul(3, B_X))), F(1, 2))), 0),
    ("unbounded-log2", UNBOUNDED, mul(pow_(y, F(-5, 2)), log_(y), log_(y),
                                      pow_(add(1, div(A_X, mul(3, y))), F(-1, 2))), 0),
    ("unbounded-eta-classes", UNBOUNDED,
     add(pow_(y, F(-3, 2)), mul(pow_(y, -2), pow_(add(1, div(A_X, mul(3, y))), -1))), 0),
    ("mellin-origin", ORIGIN, pow_(sub(1, div(y, mul(2, A_X))), -1), 1),
    ("mellin-unbounded", UNBOUNDED, pow_(add(1, div(A_X, mul(2, y))), -1), 1),
]


@pytest.mark.parametrize("name,cell,expr,mellin", INTEGRANDS, ids=[c[0] for c in INTEGRANDS])
def test_closed_form_matches_raw_quadrature(name, cell, expr, mellin):
    if mellin:
        res = mellin_pattern(expr, [cell], M=70)
        raw = mul(expr, pow_(y, -1, 1))
        svals = (0.5 + 0.4j, 0.8) if cell.at_origin else (-0.5 + 0.4j, -1.3)
    else:
        res = integrate_pattern(expr, [cell], M=70)
        raw = expr
        svals = (0.0,)
    for x0 in (0.2, 0.9):
        env = {"x": x0}
        for s in svals:
            v, tail = res.evaluate(s, env)
            q = raw_quad(raw, cell, s, env)
            assert v == pytest.approx(q, rel=1e-8, abs=1e-12), (name, s, x0)


def test_log_terms_for_integer_exponent():
    res = integrate_pattern(pow_(y, -1), [BOUNDED])
    env = {"x": 0.5}
    assert res.evaluate(0, env)[0] == pytest.approx(math.log(3.5 / 1.25))
    assert "log" in str(res)


def test_removable_points_are_evaluated_exactly():
    e = mul(pow_(y, 0, 1), pow_(sub(1, div(y, mul(2, B_X))), -1), pow_(sub(1, div(A_X, mul(2, y))), -1))
    res = integrate_pattern(e, [BOUNDED])
    env = {"x": 0.4}
    sig = [r["sigma"] for r in res.removable((-2.5, 2.5, -1, 1))]
    assert sorted(int(complex(v).real) for v in sig) == [-2, -1, 0, 1, 2]
    for sg in (-2, -1, 0):
        exact = res.evaluate(sg, env)[0]
        lim = mero_limit(lambda s: eval_terms(res.H, s, env)[0], sg).value
        assert exact == pytest.approx(lim, rel=1e-8)
        assert exact == pytest.approx(raw_quad(e, BOUNDED, sg, env), rel=1e-9)


def test_regroup_merges_exponent_classes():
    exps = [EC(F(-3, 2)), EC(-3), ExpCoeff.gaussian(-2, 1)]
    gens = [g for e in exps for g in prepare_pattern(pow_(y, e), UNBOUNDED)]
    groups = regroup_puiseux(gens)
    assert {g.d for g in groups} == {2}
    assert len(groups) == 2      # exponents agree mod 1/2 except the complex one
    env, s = {"x": 0.5}, 0.7
    for y0 in (1.5, 4.0):
        assert sum(g.evaluate(s, env, y0) for g in groups) == pytest.approx(
            sum(g.evaluate(s, env, y0) for g in gens), rel=1e-12)


def test_iterated_integration():
    inner = Cell1D(var("x"), None, box=(("x", 1, 2),))
    outer = Cell1D(const(1), const(2), yvar="x")
    res = integrate_multi(pow_(y, -2, 1), [[inner], [outer]])
    s = 0.3 + 0.2j
    want = -(2 ** s - 1) / (s * (s - 1))
    assert res.evaluate(s, {})[0] == pytest.approx(want, rel=1e-10)


def test_iterated_integration_escape():
    inner = Cell1D(var("x"), None, box=(("x", 1, 2),))
    outer = Cell1D(const(1), const(2), yvar="x")
    # the inner series has coefficients (2x)^-k, a function of the outer variable
    e = mul(pow_(y, -2, 1), pow_(add(1, div(1, mul(2, y))), -1))
    with pytest.raises(FragmentEscape):
        integrate_multi(e, [[inner], [outer]])


def test_asymptotic_expansion_error_decays():
    e = mul(pow_(y, -2, 1), pow_(add(1, div(A_X, mul(3, y))), 0, 1))
    gens = prepare_pattern(e, UNBOUNDED)
    s, env = 0.3 + 0.5j, {"x": 0.5}
    terms = asymptotic_expansion(gens, 4, s, env)
    exps = [t.exponent(s).real for t in terms]
    assert exps == sorted(exps, reverse=True)
    errs = []
    for Y in (1e1, 1e2, 1e3):
        full = e.evaluate(dict(env, y=Y), s)
        errs.append(abs(full - asymptotic_partial_sum(terms, s, env, Y)) / Y ** exps[-1])
    # the remainder is o(y^{exponent of the last kept term})
    assert errs[0] > errs[1] > errs[2]


def test_asymptotic_collision():
    gens = prepare_pattern(add(mul(pow_(y, -2)), pow_(y, -3, 1)), UNBOUNDED)
    coll = collision_set([(g.ell, g.eta, g.mu) for g in regroup_puiseux(gens)])
    assert coll.contains(EC(-1))
    with pytest.raises(CollisionError):
        asymptotic_expansion(gens, 3, -1.0, {"x": 0.5})


def test_json_is_deterministic():
    e = pow_(sub(1, div(y, mul(2, A_X))), -1)
    a = dumps(mellin_pattern(e, [ORIGIN]).to_json())
    b = dumps(mellin_pattern(e, [ORIGIN]).to_json())
    assert a == b
