"""Closed-form integration of prepared generators over cells.

Every result is a finite list of :class:`XTerm` (an x-level coefficient times
y-free strongly convergent series), together with the pole set of the result,
the removable points of the generic formula and an integration locus.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Sequence

import numpy as np

from .cells import Cell1D, PreparedGenerator, prepare_pattern
from .errors import (CollisionError, FragmentEscape, MellinError, NotRepresentable,
                     UnsupportedPattern)
from .grids import (IntegrationLocus, build_grid, collision_set, enumerate_gcells,
                    locus_assemble)
from .poles import Lattice, PoleSet, poles_of_meros
from .scalars import EC, ONE, ZERO, ExpCoeff, MeroFunction, linform_str
from .series import Coef, StrongSeriesT
from .xexpr import (X_ONE, Const, XExpr, free_vars, log_, mul, pow_)

DEFAULT_WINDOW = (-10.0, 10.0, -10.0, 10.0)
_XONE_BASE = Const(1)


def antiderivative_coeffs(mu: int, d: int) -> list:
    """c_{mu,i} = (-1)**(mu-i) * mu!/i! * d**(mu+1-i) for i = 0..mu."""
    return [Fraction((-1) ** (mu - i) * math.factorial(mu) // math.factorial(i) * d ** (mu + 1 - i))
            for i in range(mu + 1)]


def antiderivative(ell, gamma, d: int, mu: int):
    """Terms (c, i, alpha, beta, p) of F(y) = sum c (log y)**i y**((ell s+gamma+d)/d) / (alpha s+beta)**p.

    F is a y-antiderivative of y**((ell s + gamma)/d) (log y)**mu when
    ell*s + gamma + d != 0.
    """
    ell, gamma = EC(ell), EC(gamma)
    return [(c, i, ell, gamma + d, mu + 1 - i) for i, c in enumerate(antiderivative_coeffs(mu, d))]


def antiderivative_eval(ell: complex, gamma: complex, d: int, mu: int, s: complex, y):
    y = np.asarray(y, dtype=float)
    lam = ell * s + gamma + d
    ly = np.log(y)
    tot = 0j
    for c, i, _, _, p in antiderivative(0, 0, d, mu):
        tot = tot + float(c) * ly ** i * np.exp(lam / d * ly) / lam ** p
    return tot


@dataclass
class XTerm:
    """coef(s, x) * prod(series(s, x))."""
    coef: Coef
    series: tuple = ()

    def evaluate(self, s: complex, env: Mapping, memo=None):
        if memo is None:
            memo = {}
        c = self.coef.evalf(s, env, memo)
        val, tail = c, 0.0
        for S in self.series:
            v, t = S.evaluate(s, env, memo)
            tail = abs(val) * t + tail * (abs(v) + t)
            val = val * v
        return val, tail

    def free_vars(self) -> frozenset:
        out = set()
        for _, x in self.coef.terms:
            out |= free_vars(x)
        for S in self.series:
            for b in S.bases:
                out |= free_vars(b)
            for _, c in S.items(min(S.M, 3)):
                for _, x in c.terms:
                    out |= free_vars(x)
        return frozenset(out)

    def __str__(self):
        if not self.series:
            return f"({self.coef})"
        return f"({self.coef}) * " + " * ".join(
            f"S[{', '.join(str(b) for b in S.bases)}; d={S.d}]" for S in self.series)

    def to_json(self, M: int = 4) -> dict:
        return {"coef": str(self.coef), "series": [S.to_json(M) for S in self.series]}


def eval_terms(terms: Sequence[XTerm], s: complex, env: Mapping):
    memo: dict = {}
    tot, tail = 0j, 0.0
    for t in terms:
        v, e = t.evaluate(s, env, memo)
        tot += v
        tail += e
    return tot, tail


@dataclass
class _Part:
    gen: PreparedGenerator
    terms: list
    lattice: Optional[Lattice]     # where the generic formula has removable points
    kind: str                      # "bounded", "origin", "unbounded"


@dataclass
class MellinResult:
    H: list
    poles: PoleSet
    base_poles: PoleSet
    parts: list = field(default_factory=list)
    locus: Optional[IntegrationLocus] = None
    collisions: PoleSet = field(default_factory=PoleSet)
    stages: list = field(default_factory=list)

    def new_poles(self) -> PoleSet:
        pts = tuple(p for p in self.poles.points if p not in self.base_poles.points)
        lats = tuple(l for l in self.poles.lattices if l not in self.base_poles.lattices)
        return PoleSet(pts, lats)

    def _part_value(self, part: _Part, s: complex, env: Mapping, tol: float = 1e-9):
        if part.lattice is not None and part.lattice.contains(s, tol):
            t = complex(part.lattice.ell) * s + complex(part.lattice.beta)
            nu = round(t.real)
            sigma = (EC(nu) - part.lattice.beta) / part.lattice.ell
            return eval_terms(removable_terms(part.gen, sigma), complex(sigma), env)
        return eval_terms(part.terms, s, env)

    def evaluate(self, s: complex, env: Mapping = None, guard: float = 0.0):
        """(value, tail bound) of the closed form at s; removable points are handled."""
        env = env or {}
        s = complex(s)
        if guard > 0 and self.poles.distance_hint(s) < guard:
            from .errors import PoleProximity
            raise PoleProximity(f"s={s} lies within {guard} of the pole set")
        if not self.parts:
            return eval_terms(self.H, s, env)
        tot, tail = 0j, 0.0
        for p in self.parts:
            v, e = self._part_value(p, s, env)
            tot += v
            tail += e
        return tot, tail

    def __call__(self, s, env=None):
        return self.evaluate(s, env)[0]

    def removable(self, window=DEFAULT_WINDOW) -> list:
        """Points of P' \\ P inside the window, with the specialised closed forms."""
        out = []
        for p in self.parts:
            if p.lattice is None:
                continue
            for sig in _lattice_points(p.lattice, window):
                if self.base_poles.contains(sig):
                    continue
                out.append({"sigma": sig, "terms": removable_terms(p.gen, sig)})
        return out

    def to_json(self, M: int = 4) -> dict:
        out = {"H": [t.to_json(M) for t in self.H], "poles": self.poles.to_json(),
               "new_poles": self.new_poles().to_json(), "collisions": self.collisions.to_json()}
        if self.locus is not None:
            out["locus"] = self.locus.to_json()
        return out

    def __str__(self):
        return " + ".join(str(t) for t in self.H) if self.H else "0"


def _lattice_points(lat: Lattice, window) -> list:
    """Exact lattice points (points kind) with Re, Im inside the window."""
    ell = complex(lat.ell)
    out = []
    lo, hi = window[0], window[1]
    vals = [ell * complex(u, v) + complex(lat.beta) for u in (lo, hi) for v in (window[2], window[3])]
    rmin = math.floor(min(v.real for v in vals)) - 1
    rmax = math.ceil(max(v.real for v in vals)) + 1
    for nu in range(rmin, rmax + 1):
        if lat.index == "N" and nu < 0:
            continue
        try:
            sig = (EC(nu) - lat.beta) / lat.ell
        except NotRepresentable:
            continue
        z = complex(sig)
        if window[0] <= z.real <= window[1] and window[2] <= z.imag <= window[3]:
            out.append(sig)
    return out


# ---------------------------------------------------------------------------
# bounded cells

def _boundary_series(phi: StrongSeriesT, bases: tuple, ell, lam, p: int, d: int,
                     keep=None) -> StrongSeriesT:
    """Series sum xi_{m,n} * base0**(m/d) base1**(n/d) / (ell s + lam - m + n)**p."""
    def rule(i):
        if keep is not None and not keep(i):
            return None
        c = phi.coeff(i)
        if c is None:
            return None
        m, n = i
        return c * MeroFunction.linear_inv(ell, lam - m + n, p)
    return StrongSeriesT(d, bases, rule, phi.M, phi.ratio)


def _split_shared(phi: StrongSeriesT, pred) -> StrongSeriesT:
    return StrongSeriesT(phi.d, phi.bases, lambda i: phi.coeff(i) if pred(i) else None,
                         phi.M, phi.ratio)


def integrate_bounded(T: PreparedGenerator) -> MellinResult:
    """Integral of T over a bounded cell (a may be 0 for origin cells)."""
    cell = T.cell
    if cell.unbounded:
        raise ValueError("use integrate_unbounded for cells reaching infinity")
    ell, eta, d, mu = T.puiseux
    lam = eta + d
    a, b = cell.a, cell.b
    coeffs = antiderivative_coeffs(mu, d)
    P = T.all_poles()
    H: list = []
    origin = cell.at_origin
    up_bases = (mul(a, pow_(b, -1)), _XONE_BASE)
    lo_bases = (_XONE_BASE, mul(a, pow_(b, -1)))
    exp_b = pow_(b, lam / d, ell / d)
    keep = None
    lattice = None
    if ell.is_zero():
        if origin:
            n0 = _floor_neg(eta) - d      # keep n > n0 at the origin
            keep = lambda i, n0=n0: i[1] > n0
        elif eta.is_integer():
            nu = int(eta.rational())
            keep = lambda i, nu=nu: i[0] != nu + d + i[1]
            H.extend(_log_terms(T, nu, mu))
        new = PoleSet()
    else:
        if origin:
            new = PoleSet(lattices=(Lattice(-ell, -eta - d, "N", "points"),))
        else:
            lattice = Lattice(ell, eta, "Z", "points")
            new = PoleSet(lattices=(lattice,))
    for i, c in enumerate(coeffs):
        p = mu + 1 - i
        lb = pow_(log_(b), i) if i else X_ONE
        coef = T.G0 * MeroFunction.const(c) * mul(exp_b, lb)
        t = _mk_term(coef, _boundary_series(T.phi, up_bases, ell, lam, p, d, keep))
        if t is not None:
            H.append(t)
        if origin:
            continue
        la = pow_(log_(a), i) if i else X_ONE
        coef = T.G0 * MeroFunction.const(-c) * mul(pow_(a, lam / d, ell / d), la)
        t = _mk_term(coef, _boundary_series(T.phi, lo_bases, ell, lam, p, d, keep))
        if t is not None:
            H.append(t)
    if T.phi.ratio == 0:
        new = _term_poles(H)
    poles = P | new
    part = _Part(T, H, lattice, "origin" if origin else "bounded")
    return MellinResult(H, poles, P, [part])


def _mk_term(coef: Coef, S: StrongSeriesT) -> Optional[XTerm]:
    """XTerm for coef * S; finite series (ratio 0) are multiplied out."""
    if S.ratio != 0:
        return None if S.is_zero() else XTerm(coef, (S,))
    tot = Coef()
    for idx, c in S.items():
        mono = [pow_(b, EC(Fraction(k, S.d))) for b, k in zip(S.bases, idx) if k]
        tot = tot + coef * c * (mul(*mono) if mono else X_ONE)
    return None if tot.is_zero() else XTerm(tot)


def _term_poles(H) -> PoleSet:
    meros = []
    for t in H:
        meros += t.coef.meros()
        for S in t.series:
            meros += [m for _, c in S.items() for m in c.meros()]
    return poles_of_meros(meros)


def _floor_neg(eta: ExpCoeff) -> int:
    return -eta.floor_re() - 1 if not eta.re_is_integer() else -eta.floor_re()


def _log_terms(T: PreparedGenerator, nu: int, mu: int) -> list:
    """Terms with m = nu + d + n, where y**(-1) integrates to a log."""
    d = T.d
    a, b = T.cell.a, T.cell.b
    phi = T.phi
    shift = nu + d

    def rule(i):
        n = i[0]
        m = n + shift
        if m < 0:
            return None
        return phi.coeff((m, n))
    S = StrongSeriesT(d, (mul(a, pow_(b, -1)),), rule, phi.M, phi.ratio)
    logs = mul(Const(EC(Fraction(1, mu + 1))),
               _sub(pow_(log_(b), mu + 1), pow_(log_(a), mu + 1)))
    coef = T.G0 * mul(pow_(a, EC(Fraction(shift, d))), logs)
    t = _mk_term(coef, S)
    return [] if t is None else [t]


def _sub(x, y):
    from .xexpr import sub
    return sub(x, y)


def removable_terms(T: PreparedGenerator, sigma) -> list:
    """Closed form at a removable point sigma of the generic bounded formula."""
    return integrate_bounded(T.specialize(EC(sigma))).H


# ---------------------------------------------------------------------------
# unbounded cells

def _h_stream(gens: Sequence[PreparedGenerator]):
    """k -> sum_g G0_g * xi_{g,k} (Coef or None)."""
    cache: dict = {}

    def h(k):
        if k not in cache:
            tot = Coef()
            for g in gens:
                c = g.phi.coeff((k,))
                if c is not None:
                    tot = tot + g.G0 * c
            cache[k] = None if tot.is_zero() else tot
        return cache[k]
    return h


def integrate_unbounded(gens: Sequence[PreparedGenerator]) -> MellinResult:
    """Integral over (a, inf) of generators sharing the cell and Puiseux data."""
    gens = list(gens)
    T = gens[0]
    if not T.cell.unbounded:
        raise ValueError("cell is bounded")
    for g in gens[1:]:
        if g.puiseux != T.puiseux or g.cell != T.cell:
            raise ValueError("generators must share cell and Puiseux data; regroup first")
    ell, eta, d, mu = T.puiseux
    lam = eta + d
    a = T.cell.a
    h = _h_stream(gens)
    M = max(g.phi.M for g in gens)
    ratio = max(g.phi.ratio for g in gens)
    k0 = eta.floor_re() + d if ell.is_zero() else -1
    P = PoleSet()
    for g in gens:
        P = P | g.all_poles()
    H = []
    for i, c in enumerate(antiderivative_coeffs(mu, d)):
        p = mu + 1 - i

        def rule(idx, p=p):
            k = idx[0]
            if k <= k0:
                return None
            hk = h(k)
            return None if hk is None else hk * MeroFunction.linear_inv(ell, lam - k, p)
        S = StrongSeriesT(d, (_XONE_BASE,), rule, M, ratio)
        la = pow_(log_(a), i) if i else X_ONE
        t = _mk_term(Coef.of(MeroFunction.const(-c), mul(pow_(a, lam / d, ell / d), la)), S)
        if t is not None:
            H.append(t)
    new = PoleSet()
    if ratio == 0:
        new = _term_poles(H)
    elif not ell.is_zero():
        new = PoleSet(lattices=(Lattice(ell, lam, "N", "points"), Lattice(ell, lam, "N", "lines")))
    return MellinResult(H, P | new, P, [_Part(T, H, None, "unbounded")])


def regroup_puiseux(gens: Sequence[PreparedGenerator]) -> list:
    """Merge generators on one unbounded cell whose exponents differ by naturals.

    y**((ell s+eta_j)/d) = y**((ell s+eta*)/d) * a**(-nu_j/d) * (a/y)**(nu_j/d) with
    nu_j = eta* - eta_j; eta* is the member of the class with largest real part.
    """
    if not gens:
        return []
    D = 1
    for g in gens:
        D = D * g.d // math.gcd(D, g.d)
    gens = [g.lift(D) for g in gens]
    groups: list = []
    for g in gens:
        for grp in groups:
            h = grp[0]
            if h.cell == g.cell and h.ell == g.ell and h.mu == g.mu and (h.eta - g.eta).is_integer():
                grp.append(g)
                break
        else:
            groups.append([g])
    out = []
    for grp in groups:
        top = max(grp, key=lambda g: (g.eta - grp[0].eta).rational())
        if len(grp) == 1:
            out.append(grp[0])
            continue
        a = top.cell.a
        shifted = []
        for g in grp:
            nu = int((top.eta - g.eta).rational())
            shifted.append((nu, g.G0 * pow_(a, EC(Fraction(-nu, D))), g.phi))

        def rule(i, shifted=shifted):
            k = i[0]
            tot = Coef()
            for nu, c, phi in shifted:
                if k >= nu:
                    x = phi.coeff((k - nu,))
                    if x is not None:
                        tot = tot + c * x
            return None if tot.is_zero() else tot
        M = max(g.phi.M for g in grp)
        ratio = max(g.phi.ratio for g in grp)
        phi = StrongSeriesT(D, top.cell.bases(), rule, M, ratio)
        poles = PoleSet()
        for g in grp:
            poles = poles | g.all_poles()
        out.append(PreparedGenerator(top.cell, Coef.of(1), top.ell, top.eta, D, top.mu, phi,
                                     "", poles))
    return out


# ---------------------------------------------------------------------------
# one variable

def _locus_data(gens_unb: list, gens_origin: list):
    data, streams = [], []
    for g in gens_unb:
        data.append((g.ell, g.eta))
        streams.append(_h_stream([g]))
    for g in gens_origin:
        data.append((-g.ell, -g.eta - 2 * g.d))
        phi, G0 = g.phi, g.G0

        def st(k, phi=phi, G0=G0):
            c = phi.coeff((0, k))
            return None if c is None else G0 * c
        streams.append(st)
    return data, streams


def integrate_1var(pieces: Sequence, window=DEFAULT_WINDOW, seed: int = 0,
                   with_locus: bool = True) -> MellinResult:
    """Integral over y of generators on disjoint cells; pieces = [(cell, [gens])]."""
    D = 1
    for _, gens in pieces:
        for g in gens:
            D = D * g.d // math.gcd(D, g.d)
    H, parts = [], []
    P = base = PoleSet()
    unb, orig = [], []
    xcells = []
    for cell, gens in pieces:
        gens = [g.lift(D) for g in gens]
        if not gens:
            continue
        xcells.append(cell)
        if cell.unbounded:
            for g in regroup_puiseux(gens):
                r = integrate_unbounded([g])
                H += r.H
                parts += r.parts
                P, base = P | r.poles, base | r.base_poles
                unb.append(g)
        else:
            for g in gens:
                r = integrate_bounded(g)
                H += r.H
                parts += r.parts
                P, base = P | r.poles, base | r.base_poles
                if cell.at_origin:
                    orig.append(g)
    coll = collision_set([(g.ell, g.eta, g.mu) for g in unb]) | collision_set(
        [(-g.ell, -g.eta - 2 * g.d, g.mu) for g in orig])
    P = P | coll
    res = MellinResult(H, P, base, parts, collisions=coll)
    if with_locus:
        data, streams = _locus_data(unb, orig)
        grid = build_grid(data, D)
        rng = random.Random(seed)
        xs = []
        for c in xcells:
            try:
                xs += c.sample_x(rng, 2, interior=0.1)
            except MellinError:
                pass
        res.locus = locus_assemble(grid, streams, window, xs or [{}], excluded=P, seed=seed)
    return res


def mellin(pieces: Sequence, **kw) -> MellinResult:
    """Mellin transform: multiply every generator by y**(s-1), then integrate."""
    shifted = [(cell, [g.mellin_shift() for g in gens]) for cell, gens in pieces]
    return integrate_1var(shifted, **kw)


def mellin_pattern(expr: XExpr, cells: Sequence[Cell1D], M: int = 60, ratio=Fraction(2, 3),
                   **kw) -> MellinResult:
    """Mellin transform of expr (a function of y and x) over a cell decomposition."""
    pieces = [(c, prepare_pattern(expr, c, M, ratio)) for c in cells]
    return mellin(pieces, **kw)


def integrate_pattern(expr: XExpr, cells: Sequence[Cell1D], M: int = 60, ratio=Fraction(2, 3),
                      **kw) -> MellinResult:
    pieces = [(c, prepare_pattern(expr, c, M, ratio)) for c in cells]
    return integrate_1var(pieces, **kw)


# ---------------------------------------------------------------------------
# iterated integration

def integrate_multi(expr: XExpr, stages: Sequence[Sequence[Cell1D]], M: int = 40,
                    ratio=Fraction(2, 3), window=DEFAULT_WINDOW) -> MellinResult:
    """Integrate expr over the variables of ``stages`` (innermost first).

    Each stage is a cell decomposition in that stage's variable whose bounds may
    depend on the variables of later stages.  Series produced by an earlier
    stage must not depend on a later variable; otherwise the result would leave
    the supported fragment and :class:`FragmentEscape` names the offending term.
    """
    cur = [XTerm(Coef.of(1, expr))]
    P = PoleSet()
    info = []
    for cells in stages:
        yv = cells[0].yvar
        nxt = []
        for t in cur:
            for S in t.series:
                dep = set()
                for b in S.bases:
                    dep |= free_vars(b)
                for _, c in S.items(min(S.M, 3)):
                    for _, x in c.terms:
                        dep |= free_vars(x)
                if yv in dep:
                    raise FragmentEscape(f"intermediate series depends on {yv}: {t}", t)
            for m, xe in t.coef.terms:
                pieces = []
                for c in cells:
                    try:
                        gens = prepare_pattern(xe, c, M, ratio)
                    except UnsupportedPattern as e:
                        raise FragmentEscape(f"intermediate factor leaves the fragment: {e.subterm}",
                                             e.subterm) from e
                    pieces.append((c, [g.scaled(m) for g in gens]))
                r = integrate_1var(pieces, window=window, with_locus=False)
                P = P | r.poles
                for h in r.H:
                    nxt.append(XTerm(h.coef, h.series + t.series))
        info.append({"var": yv, "terms": len(nxt)})
        cur = nxt
    return MellinResult(cur, P, PoleSet(), [], stages=info)


# ---------------------------------------------------------------------------
# asymptotics at infinity

@dataclass
class AsymptoticTerm:
    coef: Coef                 # function of (s, x)
    ell: ExpCoeff              # exponent (ell*s + beta)/d of y
    beta: ExpCoeff
    d: int
    log_power: int

    def exponent(self, s: complex) -> complex:
        return (complex(self.ell) * s + complex(self.beta)) / self.d

    def __str__(self):
        return f"({self.coef}) * y^(({linform_str(self.ell, self.beta)})/{self.d}) * log(y)^{self.log_power}"


def asymptotic_expansion(gens: Sequence[PreparedGenerator], N: int, s: complex,
                         env: Optional[Mapping] = None) -> list:
    """First N nonzero terms of the expansion at infinity, ordered by decay.

    Terms are ordered at the given s by real part of the exponent and then by
    log power; a tie between different Puiseux data is a collision.
    """
    gens = regroup_puiseux(list(gens))
    if not gens:
        return []
    coll = collision_set([(g.ell, g.eta, g.mu) for g in gens])
    if coll.contains(complex(s)):
        raise CollisionError(f"s={s} lies on the collision set; the ordering is not defined")
    cand = []
    for gi, g in enumerate(gens):
        h = _h_stream([g])
        a = g.cell.a
        for k in range(g.phi.M + 1):
            hk = h(k)
            if hk is None:
                continue
            if env is not None and abs(hk.evalf(complex(s), env)) == 0:
                continue
            coef = hk * pow_(a, EC(Fraction(k, g.d)))
            t = AsymptoticTerm(coef, g.ell, g.eta - k, g.d, g.mu)
            cand.append((-t.exponent(s).real, -g.mu, gi, k, t))
    cand.sort(key=lambda c: c[:4])
    for p, q in zip(cand, cand[1:]):
        if p[2] != q[2] and abs(p[0] - q[0]) < 1e-12 and p[1] == q[1]:
            raise CollisionError("two Puiseux data give the same exponent at this s")
    return [c[4] for c in cand[:N]]


def asymptotic_partial_sum(terms: Sequence[AsymptoticTerm], s: complex, env: Mapping, y) -> complex:
    tot = 0j
    for t in terms:
        lam = t.exponent(s)
        tot += t.coef.evalf(s, env) * np.exp(lam * math.log(y)) * math.log(y) ** t.log_power
    return tot


__all__ = ["antiderivative", "antiderivative_coeffs", "antiderivative_eval", "XTerm",
           "MellinResult", "integrate_bounded", "integrate_unbounded", "regroup_puiseux",
           "integrate_1var", "mellin", "mellin_pattern", "integrate_pattern", "integrate_multi",
           "removable_terms", "asymptotic_expansion", "asymptotic_partial_sum",
           "AsymptoticTerm", "eval_terms", "DEFAULT_WINDOW"]
