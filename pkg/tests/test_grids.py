"""G-cell enumeration, epsilon gap, collision sets and loci."""
import cmath
import math
import random
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pcmellin.grids import (build_grid, cells_csv, chebyshev_radius, collision_set,
                            enumerate_gcells, epsilon_gap, locate, locus_assemble, partition_defect)
from pcmellin.scalars import EC, ExpCoeff
from pcmellin.series import Coef

WINDOW = (-2.0, 2.0, -1.5, 1.5)

ell_st = st.builds(ExpCoeff.gaussian,
                   st.sampled_from([F(-2), F(-1), F(-1, 2), F(1, 2), F(1), F(3, 2), F(2)]),
                   st.sampled_from([F(0), F(0), F(1, 2), F(-1), F(1)]))
eta_st = st.builds(EC, st.fractions(-4, 4, max_denominator=3))
data_st = st.lists(st.tuples(ell_st, eta_st), min_size=1, max_size=4)


def _near_line(grid, s, tol=1e-8) -> bool:
    for i in range(grid.N):
        f = grid.f(i, s)
        if f > -tol and abs(f - round(f)) < tol:
            return True
    return False


def _convex(verts) -> bool:
    n = len(verts)
    sgn = 0
    for k in range(n):
        (x1, y1), (x2, y2), (x3, y3) = verts[k], verts[(k + 1) % n], verts[(k + 2) % n]
        cr = (x2 - x1) * (y3 - y2) - (y2 - y1) * (x3 - x2)
        if abs(cr) < 1e-14:
            continue
        c = 1 if cr > 0 else -1
        if sgn and c != sgn:
            return False
        sgn = c
    return True


@settings(max_examples=25, deadline=None)
@given(data_st, st.integers(1, 2), st.randoms(use_true_random=False))
def test_gcells_partition_the_window(data, d, rnd):
    grid = build_grid(data, d)
    cells = enumerate_gcells(grid, WINDOW)
    assert partition_defect(cells, WINDOW) < 1e-9
    assert len({c.key for c in cells}) == len(cells)
    by_key = {c.key: c for c in cells}
    for _ in range(200):
        s = complex(rnd.uniform(*WINDOW[:2]), rnd.uniform(*WINDOW[2:]))
        if min(abs(s.real - w) for w in WINDOW[:2]) < 1e-9 or \
                min(abs(s.imag - w) for w in WINDOW[2:]) < 1e-9:
            continue        # the window is open
        if _near_line(grid, s):
            continue        # within the classification tolerance of a line
        hits = locate(cells, s)
        assert len(hits) == 1 and hits[0] is by_key[grid.classify(s)]
    for c in cells:
        if c.dim == 1:
            assert grid.classify(c.random_point(rnd)) == c.key


@settings(max_examples=25, deadline=None)
@given(data_st, st.integers(1, 2), st.randoms(use_true_random=False))
def test_gcells_are_convex(data, d, rnd):
    grid = build_grid(data, d)
    for c in enumerate_gcells(grid, WINDOW):
        if c.dim == 2:
            assert _convex(c.verts)
        for _ in range(5):
            p, q = c.random_point(rnd), c.random_point(rnd)
            assert grid.classify((p + q) / 2) == c.key


@settings(max_examples=20, deadline=None)
@given(data_st, st.integers(1, 2))
def test_epsilon_gap_is_an_inradius_lower_bound(data, d):
    grid = build_grid(data, d)
    cells = enumerate_gcells(grid, WINDOW)
    eps = epsilon_gap(grid, WINDOW, cells)
    assert eps > 0
    for c in cells:
        if c.dim != 2:
            continue
        ctr, r = chebyshev_radius(c, grid, (-60, 60, -60, 60))
        assert r >= eps * (1 - 1e-9)
        for th in np.linspace(0, 2 * np.pi, 16, endpoint=False):
            assert grid.classify(ctr + 0.999 * eps * cmath.exp(1j * th)) == c.key


def test_vertical_grid_lines_and_csv():
    grid = build_grid([(EC(1), EC(-1))], 1)        # f = Re(s) - 1 + 1 = Re(s)
    cells = enumerate_gcells(grid, (-2.5, 2.5, -1, 1))
    lines = sorted(c.re_range(grid)[0] for c in cells if c.dim == 1)
    assert lines == [0.0, 1.0, 2.0]
    text = cells_csv(grid, cells)
    assert text.splitlines()[0] == "cell,dim,x0,y0,x1,y1"


def test_collision_set():
    P = collision_set([(EC(1), EC(0), 0), (EC(2), EC(F(1, 2)), 0), (EC(3), EC(0), 1)])
    assert len(P.lattices) == 1
    lat = P.lattices[0]
    assert lat.contains(EC(F(-1, 2))) and lat.contains(EC(F(1, 2)))
    assert not lat.contains(EC(F(1, 3)))
    assert collision_set([(EC(1), EC(0), 0), (EC(1), EC(F(1, 2)), 0)]).is_empty()


def test_locus_conditions():
    # one datum with f = Re(s); g_0 is identically zero, g_1 is a nonzero constant
    grid = build_grid([(EC(1), EC(-1))], 1)
    streams = [lambda k: None if k == 0 else Coef.of(1)]
    loc = locus_assemble(grid, streams, (-2.5, 2.5, -1, 1))
    assert loc.strips() == [{"re_hi": 0, "re_lo": "-inf"}, {"re_hi": 1, "re_lo": 0}]
    assert loc.contains(0.5) is True
    assert loc.contains(1.5) is False
