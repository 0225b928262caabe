"""Non-accumulating grids, G-cell enumeration, collision sets and integration loci.

For a datum (ell_i, eta_i) and ramification d put f_i(s) = Re(ell_i*s + eta_i) + d.
The grid sets are

    Xi[i, 0, o] = {f_i < 0},   Xi[i, j, -] = {f_i = j-1},   Xi[i, j, o] = {j-1 < f_i < j}

and a G-cell fixes one (j, star) per datum.  Geometry is done in floating point
on the real plane s = u + i v; f_i is affine there.
"""
from __future__ import annotations

import csv
import io
import math
import random
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import linprog

from .poles import Lattice, PoleSet
from .scalars import EC, ExpCoeff

TOL = 1e-10
OPEN = "o"
LINE = "-"


@dataclass
class Grid:
    data: list          # [(ell, eta)] exact
    d: int

    def __post_init__(self):
        self.data = [(EC(l), EC(e)) for l, e in self.data]
        self._aff = []
        for l, e in self.data:
            lc, ec = complex(l), complex(e)
            # Re(l*s) = l.re*u - l.im*v
            self._aff.append((lc.real, -lc.imag, ec.real + self.d))

    @property
    def N(self) -> int:
        return len(self.data)

    @property
    def vertical(self) -> bool:
        return all(l.im().is_zero() for l, _ in self.data)

    def f(self, i: int, s: complex) -> float:
        p, q, c = self._aff[i]
        return p * s.real + q * s.imag + c

    def affine(self, i: int):
        return self._aff[i]

    @staticmethod
    def classify_value(t: float, tol: float = TOL):
        if t < -tol:
            return (0, OPEN)
        r = round(t)
        if abs(t - r) <= tol and r >= 0:
            return (int(r) + 1, LINE)
        if t < 0:  # within tol of 0 from below but rounding said otherwise
            return (0, OPEN)
        return (int(math.floor(t)) + 1, OPEN)

    def classify(self, s: complex, tol: float = TOL) -> tuple:
        return tuple(self.classify_value(self.f(i, s), tol) for i in range(self.N))

    def line_spacing(self, i: int) -> float:
        p, q, _ = self._aff[i]
        n = math.hypot(p, q)
        return math.inf if n == 0 else 1.0 / n

    def to_json(self) -> dict:
        return {"d": self.d, "data": [[str(l), str(e)] for l, e in self.data],
                "vertical": self.vertical}


def build_grid(data: Sequence, d: int) -> Grid:
    """Grid from Puiseux pairs (ell, eta) sharing the ramification d."""
    return Grid(list(data), d)


# ---------------------------------------------------------------------------
# convex pieces

def _dedupe(verts, tol=1e-12):
    out = []
    for v in verts:
        if not any(abs(v[0] - w[0]) <= tol and abs(v[1] - w[1]) <= tol for w in out):
            out.append(v)
    return out


def _poly_area(verts) -> float:
    if len(verts) < 3:
        return 0.0
    a = 0.0
    for k in range(len(verts)):
        x1, y1 = verts[k]
        x2, y2 = verts[(k + 1) % len(verts)]
        a += x1 * y2 - x2 * y1
    return abs(a) / 2


def _dim(verts) -> int:
    if not verts:
        return -1
    if len(verts) == 1:
        return 0
    if len(verts) >= 3 and _poly_area(verts) > 1e-14:
        return 2
    return 1


def _clip(verts, g, t, keep_le: bool):
    """Sutherland-Hodgman clip of a convex vertex cycle against g <= t (or >= t)."""
    if not verts:
        return []
    sign = 1.0 if keep_le else -1.0
    vals = [sign * (g(v) - t) for v in verts]
    if len(verts) == 1:
        return list(verts) if vals[0] <= TOL else []
    out = []
    n = len(verts)
    for k in range(n):
        cur, nxt = verts[k], verts[(k + 1) % n]
        fc, fn = vals[k], vals[(k + 1) % n]
        if fc <= TOL:
            out.append(cur)
        if (fc < -TOL and fn > TOL) or (fc > TOL and fn < -TOL):
            w = fc / (fc - fn)
            out.append((cur[0] + w * (nxt[0] - cur[0]), cur[1] + w * (nxt[1] - cur[1])))
    return _dedupe(out)


def _on_line(verts, g, t):
    pts = []
    n = len(verts)
    vals = [g(v) - t for v in verts]
    for k in range(n):
        cur, nxt = verts[k], verts[(k + 1) % n]
        fc, fn = vals[k], vals[(k + 1) % n]
        if abs(fc) <= TOL:
            pts.append(cur)
        elif (fc < -TOL and fn > TOL) or (fc > TOL and fn < -TOL):
            w = fc / (fc - fn)
            pts.append((cur[0] + w * (nxt[0] - cur[0]), cur[1] + w * (nxt[1] - cur[1])))
    pts = _dedupe(pts)
    if len(pts) > 2:
        # collinear: keep the extreme pair
        pts.sort()
        pts = [pts[0], pts[-1]]
    return pts


@dataclass
class GCell:
    key: tuple                # ((j, star), ...) per datum
    verts: list               # closure vertices inside the window
    dim: int

    @property
    def j(self):
        return tuple(k[0] for k in self.key)

    @property
    def star(self):
        return tuple(k[1] for k in self.key)

    def centroid(self) -> complex:
        u = sum(v[0] for v in self.verts) / len(self.verts)
        w = sum(v[1] for v in self.verts) / len(self.verts)
        return complex(u, w)

    def area(self) -> float:
        return _poly_area(self.verts) if self.dim == 2 else 0.0

    def contains_geom(self, s: complex, tol: float = 1e-12) -> bool:
        """Point-in-piece test on the geometry alone (relative interior)."""
        p = (s.real, s.imag)
        if self.dim == 2:
            n = len(self.verts)
            sgn = 0
            for k in range(n):
                x1, y1 = self.verts[k]
                x2, y2 = self.verts[(k + 1) % n]
                cr = (x2 - x1) * (p[1] - y1) - (y2 - y1) * (p[0] - x1)
                if abs(cr) <= tol:
                    return False
                c = 1 if cr > 0 else -1
                if sgn == 0:
                    sgn = c
                elif c != sgn:
                    return False
            return True
        if self.dim == 1:
            (x1, y1), (x2, y2) = self.verts[0], self.verts[-1]
            cr = (x2 - x1) * (p[1] - y1) - (y2 - y1) * (p[0] - x1)
            if abs(cr) > tol:
                return False
            t = ((p[0] - x1) * (x2 - x1) + (p[1] - y1) * (y2 - y1)) / ((x2 - x1) ** 2 + (y2 - y1) ** 2)
            return tol < t < 1 - tol
        return abs(p[0] - self.verts[0][0]) <= tol and abs(p[1] - self.verts[0][1]) <= tol

    def random_point(self, rng: random.Random) -> complex:
        if self.dim == 2:
            # random convex combination, pulled toward the centroid
            w = [rng.random() + 1e-3 for _ in self.verts]
            tot = sum(w)
            u = sum(wi * v[0] for wi, v in zip(w, self.verts)) / tot
            v_ = sum(wi * v[1] for wi, v in zip(w, self.verts)) / tot
            c = self.centroid()
            lam = 0.9
            return complex(lam * u + (1 - lam) * c.real, lam * v_ + (1 - lam) * c.imag)
        if self.dim == 1:
            t = rng.uniform(0.05, 0.95)
            (x1, y1), (x2, y2) = self.verts[0], self.verts[-1]
            return complex(x1 + t * (x2 - x1), y1 + t * (y2 - y1))
        return complex(*self.verts[0])

    def halfplanes(self, grid: Grid):
        """Constraints (a, b, rhs, strict) meaning a*u + b*v <= rhs for open cells."""
        out = []
        for i, (j, star) in enumerate(self.key):
            p, q, c = grid.affine(i)
            if p == 0 and q == 0:
                continue
            if star == OPEN:
                if j == 0:
                    out.append((p, q, -c))
                else:
                    out.append((p, q, j - c))
                    out.append((-p, -q, -(j - 1 - c)))
        return out

    def re_range(self, grid: Grid):
        """(lo, hi) of Re(s) over the whole cell for vertical grids (inf allowed)."""
        lo, hi = -math.inf, math.inf
        for i, (j, star) in enumerate(self.key):
            p, q, c = grid.affine(i)
            if p == 0:
                continue
            if star == LINE:
                u = (j - 1 - c) / p
                lo, hi = max(lo, u), min(hi, u)
                continue
            a, b = (-math.inf, -c / p) if j == 0 else ((j - 1 - c) / p, (j - c) / p)
            if p < 0:
                a, b = (-c / p, math.inf) if j == 0 else ((j - c) / p, (j - 1 - c) / p)
            lo, hi = max(lo, a), min(hi, b)
        return lo, hi

    def describe(self, grid: Grid) -> dict:
        out = {"j": list(self.j), "star": list(self.star), "dim": self.dim}
        if grid.vertical:
            lo, hi = self.re_range(grid)
            out["re_lo"] = _num(lo)
            out["re_hi"] = _num(hi)
        else:
            out["vertices"] = [[round(x, 12), round(y, 12)] for x, y in self.verts]
        return out


def _num(x):
    if math.isinf(x):
        return "-inf" if x < 0 else "inf"
    r = round(x)
    return int(r) if abs(x - r) < 1e-9 else x


def _window_verts(window):
    re_lo, re_hi, im_lo, im_hi = window
    return [(re_lo, im_lo), (re_hi, im_lo), (re_hi, im_hi), (re_lo, im_hi)]


def enumerate_gcells(grid: Grid, window) -> list:
    """G-cells meeting the open window (re_lo, re_hi, im_lo, im_hi)."""
    pieces = [((), _window_verts(window), 2)]
    for i in range(grid.N):
        p, q, c = grid.affine(i)
        g = (lambda v, p=p, q=q, c=c: p * v[0] + q * v[1] + c)
        nxt = []
        for key, verts, dim in pieces:
            vals = [g(v) for v in verts]
            lo, hi = min(vals), max(vals)
            if hi - lo <= TOL:
                nxt.append((key + (grid.classify_value((lo + hi) / 2),), verts, dim))
                continue
            cuts = [t for t in range(max(0, math.ceil(lo - TOL)), math.floor(hi + TOL) + 1)
                    if lo + TOL < t < hi - TOL]
            bounds = [lo] + cuts + [hi]
            for a, b in zip(bounds[:-1], bounds[1:]):
                part = _clip(_clip(verts, g, b, True), g, a, False)
                if _dim(part) != dim:
                    continue
                mid = sum(g(v) for v in part) / len(part)
                nxt.append((key + (grid.classify_value(mid),), part, dim))
            for t in cuts:
                part = _on_line(verts, g, t)
                if _dim(part) == dim - 1:
                    nxt.append((key + ((t + 1, LINE),), part, dim - 1))
        pieces = nxt
    return [GCell(key, verts, dim) for key, verts, dim in pieces]


def locate(cells: Sequence[GCell], s: complex) -> list:
    return [c for c in cells if c.contains_geom(s)]


def window_area(window) -> float:
    return (window[1] - window[0]) * (window[3] - window[2])


def partition_defect(cells: Sequence[GCell], window) -> float:
    return abs(sum(c.area() for c in cells) - window_area(window))


def chebyshev_radius(cell: GCell, grid: Grid, box) -> tuple:
    """(center, radius) of the largest ball inside the open cell intersected with box."""
    rows = list(cell.halfplanes(grid))
    re_lo, re_hi, im_lo, im_hi = box
    rows += [(-1.0, 0.0, -re_lo), (1.0, 0.0, re_hi), (0.0, -1.0, -im_lo), (0.0, 1.0, im_hi)]
    A = np.array([[a, b, math.hypot(a, b)] for a, b, _ in rows])
    rhs = np.array([r for _, _, r in rows])
    res = linprog([0, 0, -1], A_ub=A, b_ub=rhs, bounds=[(None, None), (None, None), (0, None)],
                  method="highs")
    if not res.success:
        return None, 0.0
    u, v, r = res.x
    return complex(u, v), float(r)


def epsilon_gap(grid: Grid, window, cells: Optional[list] = None, margin: Optional[float] = None):
    """Lower bound for the inradius of the open G-cells that meet the window."""
    if cells is None:
        cells = enumerate_gcells(grid, window)
    open_cells = [c for c in cells if c.dim == 2]
    if not open_cells:
        raise ValueError("no open cell in the window")
    if margin is None:
        sp = [grid.line_spacing(i) for i in range(grid.N)]
        sp = [x for x in sp if math.isfinite(x)]
        margin = 2.0 + 2.0 * max(sp, default=0.0)
    box = (window[0] - margin, window[1] + margin, window[2] - margin, window[3] + margin)
    return min(chebyshev_radius(c, grid, box)[1] for c in open_cells)


def collision_set(data: Sequence) -> PoleSet:
    """Lattices {s : (ell_i - ell_j) s + (eta_i - eta_j) in Z} for mu_i = mu_j, ell_i != ell_j."""
    lats = []
    for a in range(len(data)):
        for b in range(a + 1, len(data)):
            la, ea, ma = data[a][:3]
            lb, eb, mb = data[b][:3]
            la, lb, ea, eb = EC(la), EC(lb), EC(ea), EC(eb)
            if ma != mb or la == lb:
                continue
            dl, de = lb - la, eb - ea
            # orient so the lattice is written canonically
            if dl.lead().re < 0 or (dl.lead().re == 0 and dl.lead().im < 0):
                dl, de = -dl, -de
            lat = Lattice(dl, de, "Z", "points")
            if lat not in lats:
                lats.append(lat)
    return PoleSet(lattices=tuple(lats))


# ---------------------------------------------------------------------------
# loci

PROVED_ZERO = "proved-zero"
PROVED_NONZERO = "proved-nonzero"
UNKNOWN = "unknown"


@dataclass
class LocusCondition:
    datum: int
    k: int
    coef: object            # Coef or None
    verdict: str
    nowhere_zero: bool = False

    def to_json(self):
        return {"datum": self.datum, "k": self.k, "verdict": self.verdict,
                "nowhere_zero": self.nowhere_zero, "g": str(self.coef) if self.coef is not None else "0"}


@dataclass
class LocusCell:
    cell: GCell
    conditions: list

    @property
    def status(self) -> str:
        if all(c.verdict == PROVED_ZERO for c in self.conditions):
            return "full"
        if any(c.nowhere_zero for c in self.conditions):
            return "empty"
        return "partial"


@dataclass
class IntegrationLocus:
    grid: Grid
    window: tuple
    cells: list
    excluded: PoleSet = field(default_factory=PoleSet)

    def full_cells(self, dim: Optional[int] = None) -> list:
        return [c for c in self.cells if c.status == "full" and (dim is None or c.cell.dim == dim)]

    def locate(self, s: complex) -> Optional[LocusCell]:
        key = self.grid.classify(s)
        for c in self.cells:
            if c.cell.key == key:
                return c
        return None

    def contains(self, s: complex, x_env=None, tol: float = 1e-12):
        """True / False, or None when a condition cannot be decided numerically."""
        if self.excluded.contains(complex(s)):
            return False
        lc = self.locate(s)
        if lc is None:
            return None
        verdict = True
        for c in lc.conditions:
            if c.verdict == PROVED_ZERO:
                continue
            if c.nowhere_zero:
                return False
            if x_env is None:
                verdict = None
                continue
            if abs(c.coef.evalf(complex(s), x_env)) > tol:
                return False
        return verdict

    def strips(self) -> list:
        """Open full cells of a vertical grid as {"re_lo", "re_hi"} strips."""
        out = []
        for c in self.full_cells(dim=2):
            lo, hi = c.cell.re_range(self.grid)
            out.append({"re_lo": _num(lo), "re_hi": _num(hi)})
        return sorted(out, key=lambda d: str(d))

    def to_json(self) -> dict:
        cells = []
        for c in self.cells:
            item = c.cell.describe(self.grid)
            item["status"] = c.status
            item["conditions"] = [k.to_json() for k in c.conditions]
            cells.append(item)
        out = {"grid": self.grid.to_json(), "window": list(self.window), "cells": cells,
               "excluded": self.excluded.to_json()}
        if self.grid.vertical:
            out["strips"] = self.strips()
        return out


def condition_verdict(coef, cell: GCell, x_samples: list, rng: random.Random, n_s: int = 6):
    """Three-valued vanishing verdict for one coefficient function on a G-cell."""
    from .xexpr import nonzero_structural
    if coef is None or coef.is_zero():
        return PROVED_ZERO, False
    if len(coef.terms) == 1:
        m, x = coef.terms[0]
        if len(m.numer) == 1 and nonzero_structural(x):
            return PROVED_NONZERO, True
    for _ in range(n_s):
        s = cell.random_point(rng)
        for env in x_samples:
            try:
                v = coef.evalf(s, env)
            except (ZeroDivisionError, ValueError, ArithmeticError):
                continue
            if abs(v) > 1e-8:
                return PROVED_NONZERO, False
    return UNKNOWN, False


def locus_assemble(grid: Grid, streams: Sequence[Callable], window, x_samples: Optional[list] = None,
                   excluded: Optional[PoleSet] = None, seed: int = 0,
                   cells: Optional[list] = None) -> IntegrationLocus:
    """Attach to each G-cell the conditions g_{i,k} = 0 for k < j(i).

    ``streams[i]`` maps k to the coefficient function (Coef or None) of datum i.
    """
    rng = random.Random(seed)
    x_samples = x_samples or [{}]
    if cells is None:
        cells = enumerate_gcells(grid, window)
    out = []
    for c in cells:
        conds = []
        for i, (j, _) in enumerate(c.key):
            for k in range(j):
                g = streams[i](k)
                v, nz = condition_verdict(g, c, x_samples, rng)
                conds.append(LocusCondition(i, k, g, v, nz))
        out.append(LocusCell(c, conds))
    return IntegrationLocus(grid, tuple(window), out, excluded or PoleSet())


def cells_csv(grid: Grid, cells: Sequence[GCell]) -> str:
    """Boundary segments of the enumerated cells, one row per segment."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["cell", "dim", "x0", "y0", "x1", "y1"])
    for n, c in enumerate(cells):
        vs = c.verts
        if c.dim == 0:
            w.writerow([n, 0, vs[0][0], vs[0][1], vs[0][0], vs[0][1]])
            continue
        segs = [(vs[0], vs[-1])] if c.dim == 1 else list(zip(vs, vs[1:] + vs[:1]))
        for a, b in segs:
            w.writerow([n, c.dim, repr(a[0]), repr(a[1]), repr(b[0]), repr(b[1])])
    return buf.getvalue()


__all__ = ["Grid", "GCell", "build_grid", "enumerate_gcells", "epsilon_gap", "collision_set",
           "locus_assemble", "IntegrationLocus", "LocusCell", "LocusCondition", "locate",
           "partition_defect", "chebyshev_radius", "cells_csv", "PROVED_ZERO", "PROVED_NONZERO",
           "UNKNOWN"]
