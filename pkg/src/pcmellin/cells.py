"""Cells over a parameter box, prepared generators, pullback and pattern preparation.

Only a closed list of integrand shapes is prepared (see :func:`prepare_pattern`);
anything else raises :class:`UnsupportedPattern` naming the offending factor.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Mapping, Optional

import numpy as np

from .errors import BoundednessError, PatternMismatch, UnsupportedPattern
from .poles import PoleSet
from .scalars import EC, ONE, ZERO, ExpCoeff, MeroFunction, binomial_poly
from .series import (DEFAULT_ORDER, DEFAULT_RATIO, Coef, StrongSeriesT, lift,
                     one_series, series_mul)
from .xexpr import (X_ONE, X_ZERO, Add, Const, Log, Mul, Pow, Var, XExpr, abs_,
                    certify_lower, certify_upper, div, free_vars, mul, pow_,
                    specialize_s, subs)


@dataclass(frozen=True)
class Cell1D:
    """{(x, y): x in base, a(x) < y < b(x)}; b=None means +infinity.

    ``a == 0`` is allowed for cells touching the origin; those only carry
    series in ``y/b``.  (sigma, tau, theta) record the map
    ``y -> sigma*y**tau + theta`` onto the image cell, when there is one.
    """
    a: XExpr
    b: Optional[XExpr]
    box: tuple = ()            # ((name, lo, hi), ...)
    conditions: tuple = ()     # XExprs required > 0 on the base
    theta: XExpr = X_ZERO
    sigma: int = 1
    tau: int = 1
    yvar: str = "y"
    name: str = ""

    def __post_init__(self):
        if self.b is None and (self.sigma, self.tau) != (1, 1):
            raise ValueError("cells at infinity have sigma = tau = 1")
        if self.b is None and self.theta != X_ZERO:
            raise ValueError("cells at infinity have theta = 0")
        if self.sigma not in (1, -1) or self.tau not in (1, -1):
            raise ValueError("sigma and tau are signs")

    @property
    def unbounded(self) -> bool:
        return self.b is None

    @property
    def at_origin(self) -> bool:
        return isinstance(self.a, Const) and self.a.value.is_zero()

    @property
    def xvars(self) -> tuple:
        return tuple(n for n, _, _ in self.box)

    def box_dict(self) -> dict:
        return {n: (float(lo), float(hi)) for n, lo, hi in self.box}

    def bases(self) -> tuple:
        y = Var(self.yvar)
        if self.unbounded:
            return (div(self.a, y),)
        return (div(self.a, y), div(y, self.b))

    def in_base(self, env: Mapping) -> bool:
        for n, lo, hi in self.box:
            if not (float(lo) <= env[n] <= float(hi)):
                return False
        return all(float(np.real(c.evaluate(env))) > 0 for c in self.conditions)

    def contains(self, env: Mapping, y: float) -> bool:
        if not self.in_base(env):
            return False
        lo = float(np.real(self.a.evaluate(env)))
        if y <= lo:
            return False
        return self.unbounded or y < float(np.real(self.b.evaluate(env)))

    def sample_x(self, rng: random.Random, n: int = 1, interior: float = 0.0) -> list:
        out = []
        tries = 0
        while len(out) < n:
            tries += 1
            if tries > 1000 * n:
                raise BoundednessError("could not sample the base domain")
            env = {}
            for name, lo, hi in self.box:
                lo, hi = float(lo), float(hi)
                w = (hi - lo) * interior
                env[name] = rng.uniform(lo + w, hi - w)
            if self.in_base(env):
                out.append(env)
        return out

    def endpoints(self, env):
        a = float(np.real(self.a.evaluate(env)))
        b = math.inf if self.unbounded else float(np.real(self.b.evaluate(env)))
        return a, b

    def certify(self, normalized: bool = True, samples: int = 64, seed: int = 0) -> bool:
        """Check 1 <= a < b (or a = 0 < b) over the base box.

        Interval evaluation with bisection first; if that is inconclusive the
        check falls back to sampling and the result is tagged as sampled.
        """
        box = self.box_dict()
        ok = True
        if not self.at_origin:
            lower = 1 if normalized else 0
            ok = certify_lower(self.a, box, lower, strict=not normalized)
        if ok and not self.unbounded:
            ok = certify_lower(self.b - self.a, box, 0, strict=True)
        if ok:
            return True
        rng = random.Random(seed)
        for env in self.sample_x(rng, samples):
            a, b = self.endpoints(env)
            if (not self.at_origin and a < (1 if normalized else 0)) or not a < b:
                raise BoundednessError(f"cell {self.name or ''} violates 1 <= a < b at {env}")
        return False  # sampled only

    def describe(self) -> str:
        hi = "inf" if self.unbounded else str(self.b)
        bx = ", ".join(f"{n} in ({lo},{hi_})" for n, lo, hi_ in self.box)
        return f"{bx + ', ' if bx else ''}{self.yvar} in ({self.a}, {hi})"


def _is_intlike(e: ExpCoeff) -> bool:
    return e.is_gauss() and e.gauss().im == 0 and e.gauss().re.denominator == 1


@dataclass
class PreparedGenerator:
    """G0(s,x) * y**((ell*s + eta)/d) * (log y)**mu * phi(s,x,y) on a cell."""
    cell: Cell1D
    G0: Coef
    ell: ExpCoeff
    eta: ExpCoeff
    d: int
    mu: int
    phi: StrongSeriesT
    klass: str = ""
    poles: PoleSet = field(default_factory=PoleSet)

    def __post_init__(self):
        self.ell, self.eta = EC(self.ell), EC(self.eta)
        if not self.klass:
            self.klass = "K" if _is_intlike(self.ell) else "PK"
        if self.klass == "K" and not _is_intlike(self.ell):
            raise ValueError("class C^{K,M} needs an integer ell")
        if self.phi.d != self.d:
            raise ValueError("series ramification differs from generator d")
        want = 1 if self.cell.unbounded else 2
        if self.phi.nvars != want:
            raise ValueError(f"series needs {want} monomial bases on this cell")

    @property
    def puiseux(self):
        return (self.ell, self.eta, self.d, self.mu)

    def all_poles(self) -> PoleSet:
        from .poles import poles_of_meros
        return self.poles | self.phi.poles() | poles_of_meros(self.G0.meros())

    def evaluate(self, s: complex, env: Mapping, y, memo=None):
        """Numeric value; y may be a numpy array."""
        env = dict(env)
        env[self.cell.yvar] = y
        if memo is None:
            memo = {}
        g0 = self.G0.evalf(s, env, memo)
        yv = np.asarray(y, dtype=float)
        lam = (complex(self.ell) * s + complex(self.eta)) / self.d
        out = g0 * np.exp(lam * np.log(yv))
        if self.mu:
            out = out * np.log(yv) ** self.mu
        val, _ = self.phi.evaluate(s, env, memo)
        out = out * val
        return complex(out) if np.ndim(out) == 0 else out

    def with_exponent(self, ell, eta) -> "PreparedGenerator":
        return PreparedGenerator(self.cell, self.G0, EC(ell), EC(eta), self.d, self.mu, self.phi,
                                 "", self.poles)

    def mellin_shift(self) -> "PreparedGenerator":
        """Multiply by y**(s-1)."""
        return self.with_exponent(self.ell + self.d, self.eta - self.d)

    def lift(self, D: int) -> "PreparedGenerator":
        if D == self.d:
            return self
        k = D // self.d
        return PreparedGenerator(self.cell, self.G0, self.ell * k, self.eta * k, D, self.mu,
                                 lift(self.phi, D), self.klass, self.poles)

    def scaled(self, c) -> "PreparedGenerator":
        return PreparedGenerator(self.cell, self.G0 * c, self.ell, self.eta, self.d, self.mu,
                                 self.phi, self.klass, self.poles)

    def specialize(self, s0) -> "PreparedGenerator":
        """Freeze s = s0: ell becomes 0 and eta becomes ell*s0 + eta."""
        s0 = EC(s0)
        phi = self.phi

        def rule(i):
            c = phi.coeff(i)
            return None if c is None else c.specialize(s0)
        sphi = StrongSeriesT(phi.d, phi.bases, rule, phi.M, phi.ratio)
        return PreparedGenerator(self.cell, self.G0.specialize(s0), ZERO, self.ell * s0 + self.eta,
                                 self.d, self.mu, sphi)

    def __str__(self):
        from .scalars import linform_str
        lam = linform_str(self.ell, self.eta)
        return (f"[{self.G0}] * y^(({lam})/{self.d}) * log(y)^{self.mu} * Phi"
                f"{'(m,n)' if self.phi.nvars == 2 else '(k)'} on {self.cell.describe()}")


# ---------------------------------------------------------------------------
# pullback

def _swap_rule(phi: StrongSeriesT, kind: str):
    if kind == "swap":
        return lambda i: phi.coeff((i[1], i[0]))
    if kind == "unb->origin":      # k on a/y becomes n on y/b'
        return lambda i: phi.coeff((i[1],)) if i[0] == 0 else None
    if kind == "origin->unb":      # n on y/b becomes k on a'/y
        return lambda i: phi.coeff((0, i[0]))
    raise ValueError(kind)


def pullback(T: PreparedGenerator, sigma: int = 1, tau: int = 1, theta: XExpr = X_ZERO,
             composed: bool = False, cell: Optional[Cell1D] = None) -> PreparedGenerator:
    """Multiply by the derivative sigma*tau*y**(tau-1) of y -> sigma*y**tau + theta.

    With ``composed=True`` the generator already describes T o Pi in the new
    coordinate and ``cell`` is the domain B; only the derivative factor is applied.
    Otherwise the composition is carried out here, which is supported for
    theta = 0, sigma = 1.  The derivative is signed, so for sigma*tau = -1 the
    integral over the image equals minus the integral of the result over B.
    """
    if (sigma, tau) == (1, 1) and theta == X_ZERO and not composed:
        return T
    if composed:
        if cell is None:
            raise PatternMismatch("composed pullback needs the domain cell")
        st = sigma * tau
        return PreparedGenerator(cell, T.G0 * st, T.ell, T.eta + T.d * (tau - 1), T.d, T.mu,
                                 _rebase(T.phi, cell), T.klass, T.poles)
    if theta != X_ZERO or sigma != 1:
        raise PatternMismatch("composition with theta != 0 or sigma = -1 leaves the fragment; "
                              "pass composed=True with a caller-prepared generator")
    if tau == 1:
        return T
    A = T.cell
    y = Var(A.yvar)
    d = T.d
    if A.unbounded:
        B = Cell1D(X_ZERO, pow_(A.a, -1), A.box, A.conditions, X_ZERO, 1, -1, A.yvar)
        kind = "unb->origin"
    elif A.at_origin:
        B = Cell1D(pow_(A.b, -1), None, A.box, A.conditions, X_ZERO, 1, 1, A.yvar)
        kind = "origin->unb"
    else:
        B = Cell1D(pow_(A.b, -1), pow_(A.a, -1), A.box, A.conditions, X_ZERO, 1, -1, A.yvar)
        kind = "swap"
    phi = T.phi
    nphi = StrongSeriesT(d, B.bases(), _swap_rule(phi, kind), phi.M, phi.ratio, phi._declared_poles)
    sign = -1 * (-1) ** T.mu
    return PreparedGenerator(B, T.G0 * sign, -T.ell, -T.eta - 2 * d, d, T.mu, nphi, T.klass, T.poles)


def _rebase(phi: StrongSeriesT, cell: Cell1D) -> StrongSeriesT:
    return StrongSeriesT(phi.d, cell.bases(), phi.rule, phi.M, phi.ratio, phi._declared_poles)


# ---------------------------------------------------------------------------
# pattern preparation

def _denoms(e: ExpCoeff) -> int:
    out = 1
    for _, q in e.terms:
        for f in (q.re, q.im):
            out = out * f.denominator // math.gcd(out, f.denominator)
    return out


def _y_power(f: XExpr, y: str):
    """(e, se) if f is y**(se*s + e), else None."""
    if isinstance(f, Var) and f.name == y:
        return ONE, ZERO
    if isinstance(f, Pow) and isinstance(f.base, Var) and f.base.name == y:
        return f.exp, f.sexp
    return None


def _log_power(f: XExpr, y: str):
    if isinstance(f, Log) and f.arg == Var(y):
        return 1
    if isinstance(f, Pow) and isinstance(f.base, Log) and f.base.arg == Var(y) and f.integral():
        k = int(f.exp.gauss().re)
        return k if k >= 0 else None
    return None


def _two_terms(B: XExpr, y: str):
    """Split B = u0 + u1 * y**r with u0, u1 free of y and r a nonzero rational."""
    if not isinstance(B, Add):
        return None
    free, dep = [], []
    for t in B.terms:
        (dep if y in free_vars(t) else free).append(t)
    if not free or len(dep) != 1:
        return None
    t = dep[0]
    facs = t.factors if isinstance(t, Mul) else (t,)
    r = None
    rest = []
    for f in facs:
        yp = _y_power(f, y)
        if yp is not None:
            if r is not None or not yp[1].is_zero() or not yp[0].is_rational():
                return None
            r = yp[0].rational()
        elif y in free_vars(f):
            return None
        else:
            rest.append(f)
    if r is None or r == 0:
        return None
    from .xexpr import add
    return add(*free), mul(*rest) if rest else X_ONE, r


@dataclass
class _Binom:
    kappa: XExpr      # t = kappa * y**q
    q: Fraction
    alpha: ExpCoeff   # exponent alpha*s + beta
    beta: ExpCoeff
    source: XExpr


def _const_sign(x: XExpr) -> int:
    """Sign of the leading constant, for the positivity checks."""
    if isinstance(x, Const):
        v = x.value
        return 1 if v.is_rational() and v.rational() > 0 else -1
    if isinstance(x, Mul) and isinstance(x.factors[0], Const):
        v = x.factors[0].value
        return 1 if v.is_rational() and v.rational() > 0 else -1
    return 1


class _Acc:
    def __init__(self):
        self.g0 = []
        self.e = ZERO
        self.se = ZERO
        self.mu = 0
        self.binoms: list = []


def _absorb(acc: _Acc, f: XExpr, cell: Cell1D, ratio: Fraction):
    y = cell.yvar
    if y not in free_vars(f):
        acc.g0.append(f)
        return
    yp = _y_power(f, y)
    if yp is not None:
        acc.e = acc.e + yp[0]
        acc.se = acc.se + yp[1]
        return
    lp = _log_power(f, y)
    if lp is not None:
        acc.mu += lp
        return
    if isinstance(f, Pow) or isinstance(f, Add):
        base = f.base if isinstance(f, Pow) else f
        e, se = (f.exp, f.sexp) if isinstance(f, Pow) else (ONE, ZERO)
        split = _two_terms(base, y)
        if split is None:
            raise UnsupportedPattern(f"unsupported y-dependent factor: {f}", f)
        u0, u1, r = split
        integer_exp = se.is_zero() and _is_intlike(e)
        box = cell.box_dict()
        # orientation 1: base = u0 * (1 + (u1/u0) y^r)
        cands = []
        for orient in (0, 1):
            if orient == 0:
                D, kappa, q = u0, div(u1, u0), r
            else:
                D, kappa, q = u1, div(u0, u1), -r
            if not integer_exp and _const_sign(D) < 0:
                continue
            if q > 0 and cell.unbounded:
                continue
            if q < 0 and cell.at_origin:
                continue
            edge = pow_(cell.b, EC(q)) if q > 0 else pow_(cell.a, EC(q))
            lim = Fraction(1, 2) if not (integer_exp and e == EC(-1)) else ratio
            if certify_upper(abs_(mul(kappa, edge)), box, float(lim)):
                cands.append((orient, D, kappa, q))
        if not cands:
            raise UnsupportedPattern(f"cannot certify a convergent expansion of {f} on the cell", f)
        orient, D, kappa, q = cands[0]
        acc.g0.append(pow_(D, e, se))
        if orient == 1:
            acc.e = acc.e + e * EC(r)
            acc.se = acc.se + se * EC(r)
        acc.binoms.append(_Binom(kappa, q, se, e, f))
        return
    raise UnsupportedPattern(f"unsupported y-dependent factor: {f}", f)


def _binom_series(b: _Binom, cell: Cell1D, d: int, M: int, ratio: Fraction) -> StrongSeriesT:
    step = b.q * d
    if step.denominator != 1:
        raise AssertionError("ramification does not clear the binomial step")
    step = abs(int(step))
    if b.q > 0:
        base_coef = mul(b.kappa, pow_(cell.b, EC(b.q)))
        pos = 1
    else:
        base_coef = mul(b.kappa, pow_(cell.a, EC(b.q)))
        pos = 0
    cache: dict = {}

    def rule(i):
        k = i[pos] if len(i) == 2 else i[0]
        if len(i) == 2 and i[1 - pos] != 0:
            return None
        if k % step:
            return None
        j = k // step
        if j not in cache:
            bj = binomial_poly(j, b.alpha, b.beta)
            cache[j] = None if bj.is_zero() else Coef.of(bj, pow_(base_coef, j))
        return cache[j]
    return StrongSeriesT(d, cell.bases(), rule, M, ratio)


def _terms_of(expr: XExpr):
    from .xexpr import Add as _Add
    if isinstance(expr, _Add):
        return list(expr.terms)
    return [expr]


def prepare_term(term: XExpr, cell: Cell1D, M: int = DEFAULT_ORDER,
                 ratio: Fraction = DEFAULT_RATIO) -> PreparedGenerator:
    acc = _Acc()
    facs = term.factors if isinstance(term, Mul) else (term,)
    for f in facs:
        _absorb(acc, f, cell, ratio)
    d = 1
    for e in (acc.e, acc.se):
        dd = _denoms(e)
        d = d * dd // math.gcd(d, dd)
    for b in acc.binoms:
        dd = b.q.denominator
        d = d * dd // math.gcd(d, dd)
    g0 = mul(*acc.g0) if acc.g0 else X_ONE
    phi = one_series(cell.bases(), d, M)
    for b in acc.binoms:
        phi = series_mul(phi, _binom_series(b, cell, d, M, ratio))
    return PreparedGenerator(cell, Coef.of(1, g0), acc.se * d, acc.e * d, d, acc.mu, phi)


def prepare_pattern(expr: XExpr, cell: Cell1D, M: int = DEFAULT_ORDER,
                    ratio: Fraction = DEFAULT_RATIO) -> list:
    """Prepared generators whose sum equals expr on the cell.

    Supported shapes (products of, summed over terms):
      * factors free of y, powers y**(alpha*s+beta), powers of log(y);
      * (u0 + u1*y**r)**E with one side dominating: geometric when E = -1
        (ratio <= rho), binomial otherwise (ratio <= 1/2); E may involve s.
    """
    out = []
    for t in _terms_of(expr):
        out.append(prepare_term(t, cell, M, ratio))
    return out


# ---------------------------------------------------------------------------

def monomial_rescale(terms, cell: Cell1D) -> list:
    """Rewrite c_j(x) * y**(ell_j/d) as c~_j * (a/y)**(-ell_j/d) or c~_j * (y/b)**(ell_j/d).

    ``terms`` holds (c_j, ell_j, d) triples.  The returned dicts carry the
    partition tag ("<", "=", ">"), the rescaled coefficient and the monomial.
    Every rescaled coefficient must certify sup |c~_j| <= 1 on the base box.
    """
    box = cell.box_dict()
    y = Var(cell.yvar)
    out = []
    for c, l, d in terms:
        l = Fraction(l)
        e = EC(l / d)
        if l == 0:
            tag, ct, mono = "=", c, X_ONE
        elif l < 0:
            if cell.at_origin:
                raise BoundednessError("negative power unbounded near the origin")
            tag, ct, mono = "<", mul(c, pow_(cell.a, e)), pow_(div(cell.a, y), -e)
        else:
            if cell.unbounded:
                raise BoundednessError("positive power unbounded at infinity")
            tag, ct, mono = ">", mul(c, pow_(cell.b, e)), pow_(div(y, cell.b), e)
        if not certify_upper(abs_(ct), box, 1.0):
            raise BoundednessError(f"cannot certify sup |{ct}| <= 1")
        out.append({"J": tag, "coeff": ct, "monomial": mono, "power": abs(l) / d})
    return out


__all__ = ["Cell1D", "PreparedGenerator", "pullback", "prepare_pattern", "prepare_term",
           "monomial_rescale"]
