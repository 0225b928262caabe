"""Exact scalars, meromorphic coefficients, x-expressions and pole sets."""
import math
import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from pcmellin.errors import UndecidableComparison
from pcmellin.poles import Lattice, PoleSet
from pcmellin.scalars import (EC, ExpCoeff, MeroFunction, binomial_poly, declare_constant,
                              pole_order_and_limit)
from pcmellin.xexpr import (abs_, add, certify_lower, certify_upper, const, div, log_, mul,
                            nonzero_structural, pow_, specialize_s, sub, subs, var)

fracs = st.fractions(min_value=-20, max_value=20, max_denominator=12)
gauss = st.builds(ExpCoeff.gaussian, fracs, fracs)


@given(gauss, gauss, gauss)
def test_gaussian_field_axioms(a, b, c):
    assert (a + b) * c == a * c + b * c
    assert a * b == b * a
    if not b.is_zero():
        assert (a / b) * b == a
    assert a - a == EC(0)


@given(gauss, gauss)
def test_gaussian_matches_complex(a, b):
    assert complex(a * b) == pytest.approx(complex(a) * complex(b), abs=1e-9)
    assert complex(a + b) == pytest.approx(complex(a) + complex(b), abs=1e-12)


def test_named_constant_arithmetic():
    r2 = declare_constant("r2", "sqrt", 2)
    assert r2 * r2 == EC(2)
    assert (1 + r2) * (1 - r2) == EC(-1)
    assert (r2 + EC(F(1, 2))).floor_re() == 1
    assert not r2.is_integer()
    assert complex(r2) == pytest.approx(math.sqrt(2))
    with pytest.raises(ValueError):
        declare_constant("r2", "sqrt", 3)


def test_undecidable_sign_is_raised():
    r2 = declare_constant("r2", "sqrt", 2)
    t = declare_constant("t8", "sqrt", 8)
    with pytest.raises(UndecidableComparison):
        (2 * r2 - t).sign_re()
    assert (2 * r2 - t + EC(F(1, 10**6))).sign_re() == 1


def test_mero_normal_form():
    s = MeroFunction.s()
    inv = MeroFunction.linear_inv
    assert (s - 1) * inv(1, -1) == MeroFunction.const(1)
    assert inv(1, 0) + inv(1, 0) == MeroFunction.const(2) * inv(1, 0)
    assert (inv(1, 0) - inv(1, 0)).is_zero()
    assert inv(2, 4) == MeroFunction.const(F(1, 2)) * inv(1, 2)
    assert MeroFunction.from_json(inv(2, 3, 2).to_json()) == inv(2, 3, 2)


@settings(max_examples=60)
@given(st.lists(st.tuples(fracs, fracs), min_size=1, max_size=3), st.lists(fracs, max_size=3),
       st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False))
def test_mero_evaluation_is_a_homomorphism(lins, numer, s):
    f = MeroFunction.poly([EC(c) for c in numer] or [EC(1)])
    g = MeroFunction.const(1)
    for a, b in lins:
        if a != 0:
            g = g * MeroFunction.linear_inv(a, b)
    den = [complex(a) * s + complex(b) for a, b in lins if a != 0]
    if any(abs(d) < 1e-3 for d in den):
        return
    assert (f * g).evalf(s) == pytest.approx(f.evalf(s) * g.evalf(s), rel=1e-9, abs=1e-12)
    assert (f + g).evalf(s) == pytest.approx(f.evalf(s) + g.evalf(s), rel=1e-9, abs=1e-12)


@given(st.integers(0, 8), st.integers(-6, 10))
def test_binomial_poly_values(k, n):
    assert binomial_poly(k)(EC(n)) == EC(F(math.comb(n, k)) if n >= 0 else
                                          F(math.prod(n - j for j in range(k)), math.factorial(k)))


def test_pole_order_and_limit():
    s = MeroFunction.s()
    assert pole_order_and_limit(MeroFunction.linear_inv(1, 2), -2)[0] == 1
    order, val = pole_order_and_limit((s - 1) * MeroFunction.linear_inv(1, -1), 1)
    assert order <= 0 and val == EC(1)
    assert pole_order_and_limit(s * MeroFunction.linear_inv(1, 0, 2), 0)[0] == 1


# --- x-expressions -----------------------------------------------------------

def test_xexpr_canonical_forms():
    x = var("x")
    a = add(1, div(x, 2))
    assert pow_(x, 2) * pow_(x, -5) == pow_(x, -3)
    assert sub(a, a) == const(0)
    assert str(add(x, 1)) == str(add(1, x))
    assert a.evaluate({"x": 1.0}) == pytest.approx(1.5)
    assert pow_(a, -1, 1).evaluate({"x": 1.0}, s=0.5 + 1j) == pytest.approx(1.5 ** (-0.5 + 1j))


def test_xexpr_subs_and_specialize():
    x, y, z = var("x"), var("y"), var("z")
    e = mul(pow_(y, 0, 1), log_(y))
    e2 = subs(e, {"y": mul(2, z)})
    assert e2.evaluate({"z": 1.5}, s=0.3) == pytest.approx(3 ** 0.3 * math.log(3))
    assert specialize_s(pow_(x, 1, 1), EC(2)) == pow_(x, 3)


def test_certification():
    x = var("x")
    b = add(2, x)
    assert certify_upper(div(1, b), {"x": (0, 1)}, 0.5)
    assert not certify_upper(div(1, b), {"x": (0, 1)}, 0.4)
    assert certify_lower(b, {"x": (0, 1)}, 2.0)
    assert nonzero_structural(pow_(abs_(sub(x, 3)), 0, 1))


# --- pole sets -----------------------------------------------------------------

@given(fracs.filter(lambda v: v != 0), fracs, st.integers(0, 40), st.sampled_from(["Z", "N"]))
def test_lattice_members_check_back(ell, beta, nu, index):
    lat = Lattice(EC(ell), EC(beta), index, "points")
    m = lat.member(nu)
    assert lat.contains(m)
    assert lat.contains(complex(m))
    g = lat.generators()
    k = (complex(m) - g["offset"]) / g["step"]
    assert abs(k - round(k.real)) < 1e-9


def test_lattice_random_members_and_lines():
    rng = random.Random(1)
    lat = Lattice(ExpCoeff.gaussian(1, 1), EC(F(1, 3)), "Z", "lines")
    for m in lat.random_members(100, rng):
        assert lat.contains(m)
    neg = Lattice(EC(-1), EC(0), "N")      # {0, -1, -2, ...}
    assert not neg.contains(EC(1)) and neg.contains(EC(-3)) and not neg.contains(-2.5)


def test_poleset_union_and_json():
    P = PoleSet.point(EC(2)).union(PoleSet(lattices=(Lattice(EC(-1), EC(0), "N"),)))
    assert P.contains(EC(2)) and P.contains(EC(-5)) and not P.contains(EC(1))
    j = P.to_json()
    assert j["lattices"][0]["set"] == "-s in N"
    assert j["lattices"][0]["offset"] == [0.0, 0.0]
    assert P.distance_hint(2.1) == pytest.approx(0.1)
