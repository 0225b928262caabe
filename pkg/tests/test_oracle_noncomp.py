"""Quadrature oracle, meromorphic limits and the oscillatory-sum tools."""
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pcmellin.errors import DivergentLimit, NonIntegrable
from pcmellin.noncomp import (OscillatorySum, integrability_verdict, leading_level_sum,
                              pair_witness_search, prop_phases, weyl_check, witness_search)
from pcmellin.oracle import estimate_decay, gk_adaptive, mero_limit, power_log_tail, quad_function
from pcmellin.scalars import EC


@pytest.mark.parametrize("deg", [0, 5, 12, 22])
def test_gk_polynomial_exactness(deg):
    rep = gk_adaptive(lambda t: t ** deg, 0.0, 1.0, 1e-14)
    assert rep.value == pytest.approx(1 / (deg + 1), rel=1e-13)


def test_infinite_and_origin_ranges():
    f = lambda t: np.log(t) / t ** 2
    assert quad_function(f, 1.0, math.inf, 1e-12, decay=(-2.0, 1)).value == pytest.approx(1.0, rel=1e-10)
    g = lambda t: t ** -0.5
    assert quad_function(g, 0.0, 1.0, 1e-12, decay0=(-0.5, 0)).value == pytest.approx(2.0, rel=1e-10)
    h = lambda t: np.exp((-1.5 + 2j) * np.log(t))
    want = 1 / (0.5 - 2j)
    assert quad_function(h, 1.0, math.inf, 1e-12, decay=estimate_decay(h, +1)).value == \
        pytest.approx(want, rel=1e-9)
    with pytest.raises(NonIntegrable):
        quad_function(lambda t: 1 / t, 1.0, math.inf, decay=(-1.0, 0))


def test_power_log_tail():
    assert power_log_tail(2.0, 0, 1.0) == pytest.approx(math.exp(-2) / 2)
    assert power_log_tail(1.0, 1, 0.0) == pytest.approx(1.0)


@settings(max_examples=30, deadline=None)
@given(st.floats(-2, 2), st.floats(0.1, 3), st.floats(0.1, 3),
       st.floats(-3, 3), st.floats(-3, 3))
def test_quadrature_is_additive(a, w1, w2, c1, c2):
    f = lambda t: np.exp(1j * c1 * t) * np.cos(c2 * t) + t ** 2
    b, c = a + w1, a + w1 + w2
    whole = gk_adaptive(f, a, c, 1e-12).value
    parts = gk_adaptive(f, a, b, 1e-12).value + gk_adaptive(f, b, c, 1e-12).value
    assert whole == pytest.approx(parts, rel=1e-10, abs=1e-12)


def test_estimate_decay():
    p, mu = estimate_decay(lambda t: 3.0 / t ** 2.5, +1)
    assert -2.5 < p < -2.4 and mu == 0
    p0, _ = estimate_decay(lambda t: t ** -0.25, -1)
    assert -0.35 < p0 < -0.25


def test_mero_limit():
    assert mero_limit(lambda s: (np.exp(s) - 1) / s, 0).value == pytest.approx(1.0, abs=1e-10)
    assert mero_limit(lambda s: np.sin(s) / s, 0).value == pytest.approx(1.0, abs=1e-10)
    with pytest.raises(DivergentLimit):
        mero_limit(lambda s: 1 / s, 0)
    with pytest.raises(DivergentLimit):
        mero_limit(lambda s: 1 / (s - 1) ** 2, 1)


# --- oscillatory sums ---------------------------------------------------------

term_st = st.tuples(st.complex_numbers(min_magnitude=0.1, max_magnitude=3, allow_nan=False,
                                       allow_infinity=False),
                    st.sampled_from([0.5, 1.0, 2.0, math.sqrt(2)]),
                    st.sampled_from([(), (0.5,), (0.0, 0.25)]))


@settings(max_examples=50)
@given(st.lists(term_st, min_size=1, max_size=4), st.floats(0.1, 0.9))
def test_merge_is_invariant_under_splitting(terms, w):
    E = OscillatorySum(terms)
    if E.is_zero():
        return
    E2 = E.split_term(0, w)
    ys = np.geomspace(1.0, 50.0, 37)
    assert np.allclose(E.phase_sum(ys), E2.phase_sum(ys), atol=1e-12)
    assert len(E2.terms) == len(E.terms)


def test_merge_cancels_to_zero():
    E = OscillatorySum([(1, 1.0, ()), (-1, 1.0, ())])
    assert E.is_zero()
    assert integrability_verdict(E)["verdict"] == "zero-function"


def test_integrability_verdicts():
    assert integrability_verdict(OscillatorySum([(1, 1.0, ())], (-2, 0)))["verdict"] == \
        "integrable-on-(b,inf)"
    assert integrability_verdict(OscillatorySum([(1, 1.0, ())], (-1, 3)))["verdict"] == "non-integrable"
    assert integrability_verdict(OscillatorySum([(1, 0.0, ())], (EC(-1) + EC(0), 0)))["verdict"] == \
        "non-integrable"


def test_weyl_check_decays():
    F = prop_phases([1.0])
    rep = weyl_check(F, [1], T_max=1e3)
    assert rep["final"] <= 2 / (2 * np.pi * 1e3) * 1.01 + 1e-6
    F2 = prop_phases([2 * np.pi, 2 * np.pi * math.sqrt(2)])
    rep2 = weyl_check(F2, [1, -1], T_max=1e3)
    assert rep2["decreasing"] and rep2["final"] < 1e-2
    with pytest.raises(ValueError):
        weyl_check(F2, [0, 0])


def test_witness_and_pair_searches():
    E = OscillatorySum([(1, 1.0, ()), (-1, 2.0, ())])
    assert witness_search(E, eps=0.5)["status"] == "found"
    assert witness_search(E, eps=5.0)["status"] == "exhausted"
    assert pair_witness_search(OscillatorySum([(1, 1.0, ())]), 1.0)["status"] == "found"
    assert pair_witness_search(OscillatorySum([(1, 1.0, ()), (1, 0.0, ())]), 1.0)["status"] == "found"
    assert pair_witness_search(OscillatorySum([(1, 0.0, ())]), 1e-3)["status"] == "exhausted"


def test_leading_level_sum():
    top, lead = leading_level_sum([(1, -1 + 2j, 0), (2, -1 + 3j, 0), (5, -2 + 1j, 4), (1, -1 + 1j, 1)])
    assert top == (-1.0, 1)
    assert lead == [(1, 1.0, ())]
