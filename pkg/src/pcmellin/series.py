"""Truncated strongly convergent series with (MeroFunction x XExpr) coefficients.

A :class:`StrongSeriesT` is ``sum_idx coeff(idx) * prod_j base_j ** (idx_j / d)``.
On a bounded cell the bases are ``(a/y, y/b)`` and ``idx = (m, n)``; on an
unbounded cell there is one base ``a/y``.  Bases take values in ``[0, 1]`` on the
cell, and the coefficients are memoised on demand.
"""
from __future__ import annotations

import math
import threading
from fractions import Fraction
from itertools import product
from typing import Callable, Iterable, Optional

import numpy as np

from .errors import PoleProximity, UnitCertificationError
from .poles import PoleSet, poles_of_meros
from .scalars import EC, ONE, ExpCoeff, MeroFunction, binomial_poly
from .xexpr import X_ONE, X_ZERO, XExpr, mul, pow_

DEFAULT_ORDER = 60
DEFAULT_RATIO = Fraction(2, 3)


def _fold_const(m: MeroFunction, x: XExpr):
    """Move a leading constant of x into the MeroFunction factor."""
    from .xexpr import Const, Mul
    if isinstance(x, Const):
        return m * MeroFunction.const(x.value), X_ONE
    if isinstance(x, Mul) and isinstance(x.factors[0], Const):
        c = x.factors[0].value
        return m * MeroFunction.const(c), mul(*x.factors[1:])
    return m, x


class Coef:
    """Finite sum of MeroFunction(s) * XExpr(x) products."""

    __slots__ = ("terms",)

    def __init__(self, terms: Iterable = ()):
        acc: dict = {}
        order = []
        for m, x in terms:
            if m.is_zero() or x == X_ZERO:
                continue
            m, x = _fold_const(m, x)
            k = x.key()
            if k in acc:
                acc[k] = (acc[k][0] + m, x)
            else:
                acc[k] = (m, x)
                order.append(k)
        self.terms = tuple(acc[k] for k in order if not acc[k][0].is_zero())

    @staticmethod
    def of(mero=None, xe=None) -> "Coef":
        m = mero if isinstance(mero, MeroFunction) else MeroFunction.const(1 if mero is None else mero)
        return Coef([(m, X_ONE if xe is None else xe)])

    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, o: "Coef") -> "Coef":
        return Coef(self.terms + o.terms)

    def __neg__(self):
        return Coef([(-m, x) for m, x in self.terms])

    def __sub__(self, o):
        return self + (-o)

    def __mul__(self, o) -> "Coef":
        if isinstance(o, MeroFunction):
            return Coef([(m * o, x) for m, x in self.terms])
        if isinstance(o, XExpr):
            return Coef([(m, mul(x, o)) for m, x in self.terms])
        if not isinstance(o, Coef):
            return self * MeroFunction.const(o)
        return Coef([(m1 * m2, mul(x1, x2)) for m1, x1 in self.terms for m2, x2 in o.terms])

    __rmul__ = __mul__

    def specialize(self, s0) -> "Coef":
        from .xexpr import specialize_s
        return Coef([(m.specialize(s0), specialize_s(x, EC(s0))) for m, x in self.terms])

    def meros(self):
        return [m for m, _ in self.terms]

    def evalf(self, s: complex, env, memo=None, guard: float = 0.0):
        if memo is None:
            memo = {}
        tot = 0j
        for m, x in self.terms:
            if guard > 0:
                for a, b, _ in m.pole_factors():
                    if abs(complex(a) * s + complex(b)) < guard:
                        raise PoleProximity(f"s={s} within {guard} of a pole of {m}")
            tot = tot + m.evalf(s) * x.evaluate(env, s, memo)
        return tot

    def __eq__(self, o):
        return isinstance(o, Coef) and set(self.terms) == set(o.terms)

    def __hash__(self):
        return hash(frozenset(self.terms))

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for m, x in self.terms:
            if x == X_ONE:
                parts.append(f"[{m}]")
            elif m == MeroFunction.const(1):
                parts.append(str(x))
            else:
                parts.append(f"[{m}]*{x}")
        return " + ".join(parts)

    __repr__ = __str__


RuleT = Callable[[tuple], Optional[Coef]]


class StrongSeriesT:
    def __init__(self, d: int, bases: tuple, rule: RuleT, M: int = DEFAULT_ORDER,
                 ratio=DEFAULT_RATIO, poles: Optional[PoleSet] = None, name: str = ""):
        if d < 1:
            raise ValueError("ramification d must be positive")
        self.d = int(d)
        self.bases = tuple(bases)
        self.rule = rule
        self.M = int(M)
        self.ratio = Fraction(ratio)
        if not (0 <= self.ratio < 1):
            raise ValueError("ratio must lie in [0, 1)")
        self._declared_poles = poles
        self.name = name
        self._memo: dict = {}
        self._lock = threading.Lock()
        self._items: dict = {}

    # structure --------------------------------------------------------
    @property
    def nvars(self) -> int:
        return len(self.bases)

    @property
    def bounded_fibres(self) -> bool:
        return self.nvars == 2

    def coeff(self, idx) -> Optional[Coef]:
        idx = tuple(idx)
        with self._lock:
            if idx in self._memo:
                return self._memo[idx]
        c = self.rule(idx)
        if c is not None and c.is_zero():
            c = None
        with self._lock:
            self._memo[idx] = c
        return c

    def indices(self, M: Optional[int] = None):
        M = self.M if M is None else M
        return product(range(M + 1), repeat=self.nvars)

    def items(self, M: Optional[int] = None):
        """Nonzero (idx, Coef) pairs in the box max(idx) <= M."""
        M = self.M if M is None else M
        got = self._items.get(M)
        if got is None:
            got = [(i, c) for i in self.indices(M) for c in [self.coeff(i)] if c is not None]
            self._items[M] = got
        return got

    def with_order(self, M: int) -> "StrongSeriesT":
        out = StrongSeriesT(self.d, self.bases, self.rule, M, self.ratio, self._declared_poles, self.name)
        out._memo = self._memo
        return out

    def poles(self) -> PoleSet:
        if self._declared_poles is not None:
            return self._declared_poles
        return poles_of_meros(m for _, c in self.items() for m in c.meros())

    def is_zero(self) -> bool:
        return not self.items()

    # evaluation -------------------------------------------------------
    def coeff_values(self, s: complex, env, memo=None, guard: float = 0.0):
        items = self.items()
        if memo is None:
            memo = {}
        idx = np.array([i for i, _ in items], dtype=int).reshape(len(items), self.nvars)
        vals = np.array([c.evalf(s, env, memo, guard) for _, c in items], dtype=complex)
        return idx, vals

    def evaluate(self, s: complex, env, memo=None, guard: float = 0.0, coeffs=None):
        """(partial sum, tail bound); env values may be numpy arrays."""
        if memo is None:
            memo = {}
        idx, vals = coeffs if coeffs is not None else self.coeff_values(s, env, memo, guard)
        if len(vals) == 0:
            return 0j, 0.0
        bvals = [np.asarray(b.evaluate(env, s, memo), dtype=float) for b in self.bases]
        shape = np.broadcast(*bvals).shape if bvals else ()
        rho = float(self.ratio)
        pw = [np.power.outer(bv, np.arange(self.M + 1) / self.d) for bv in bvals]
        mono = np.ones(shape + (len(vals),))
        for j in range(self.nvars):
            mono = mono * pw[j][..., idx[:, j]]
        terms = mono * vals
        total = terms.sum(axis=-1)
        if rho > 0 and self.nvars:
            tops = idx.max(axis=1)
            Cmax = (np.abs(terms) / rho ** tops).max(axis=-1)
        else:
            Cmax = np.zeros(shape)
        tail = Cmax * tail_factor(self.M, self.nvars, rho)
        if total.ndim == 0:
            return complex(total), float(tail)
        return total, tail

    def __call__(self, s, env):
        return self.evaluate(s, env)[0]

    def to_json(self, M: Optional[int] = None) -> dict:
        coeffs = []
        for i, c in self.items(M):
            for m, x in c.terms:
                entry = {"m": i[0] if i else 0, "mero": m.to_json(), "xexpr": str(x)}
                if len(i) > 1:
                    entry["n"] = i[1]
                coeffs.append(entry)
        return {"d": self.d, "M": self.M if M is None else M,
                "ratio": [self.ratio.numerator, self.ratio.denominator],
                "bases": [str(b) for b in self.bases], "coeffs": coeffs}

    def __repr__(self):
        return f"StrongSeriesT(d={self.d}, bases={[str(b) for b in self.bases]}, M={self.M})"


def tail_factor(M: int, r: int, rho: float) -> float:
    """sum over idx outside the box [0,M]^r of rho**max(idx)."""
    if r == 0 or rho == 0:
        return 0.0
    if r == 1:
        return rho ** (M + 1) / (1 - rho)
    if r == 2:
        return rho ** (M + 1) * ((2 * M + 3) / (1 - rho) + 2 * rho / (1 - rho) ** 2)
    # crude general bound: (t+1)^r - t^r <= r (t+1)^(r-1)
    tot, t = 0.0, M + 1
    while True:
        term = r * (t + 1) ** (r - 1) * rho ** t
        tot += term
        if term < 1e-300 or t > M + 10000:
            return tot
        t += 1


# ---------------------------------------------------------------------------
# constructors

def constant_series(coef: Coef, bases: tuple, d: int = 1, M: int = DEFAULT_ORDER) -> StrongSeriesT:
    zero = (0,) * len(bases)
    return StrongSeriesT(d, bases, lambda i: coef if i == zero else None, M, Fraction(0))


def one_series(bases: tuple, d: int = 1, M: int = DEFAULT_ORDER) -> StrongSeriesT:
    return constant_series(Coef.of(1), bases, d, M)


def from_dict(d: int, bases: tuple, table: dict, M: int = DEFAULT_ORDER, ratio=DEFAULT_RATIO) -> StrongSeriesT:
    table = {tuple(k): (v if isinstance(v, Coef) else Coef.of(v)) for k, v in table.items()}
    return StrongSeriesT(d, bases, lambda i: table.get(i), M, ratio)


def series_eval(phi: StrongSeriesT, s: complex, env, guard: float = 0.0):
    return phi.evaluate(s, env, guard=guard)


# ---------------------------------------------------------------------------
# arithmetic

def _rational_root_up(rho: Fraction, k: int) -> Fraction:
    """A rational >= rho**(1/k), strictly below 1."""
    if k == 1 or rho == 0:
        return rho
    v = float(rho) ** (1.0 / k)
    r = Fraction(v).limit_denominator(10 ** 6)
    while r < v or r ** k < rho:
        r += Fraction(1, 10 ** 6)
    return min(r, Fraction(999999, 1000000))


def lift(phi: StrongSeriesT, D: int) -> StrongSeriesT:
    """Re-express phi with ramification D (a multiple of phi.d)."""
    if D % phi.d:
        raise ValueError(f"{D} is not a multiple of {phi.d}")
    k = D // phi.d
    if k == 1:
        return phi

    def rule(i):
        if any(j % k for j in i):
            return None
        return phi.coeff(tuple(j // k for j in i))
    return StrongSeriesT(D, phi.bases, rule, phi.M * k, _rational_root_up(phi.ratio, k),
                         phi._declared_poles, phi.name)


def _common(p: StrongSeriesT, q: StrongSeriesT):
    if [b.key() for b in p.bases] != [b.key() for b in q.bases]:
        raise ValueError("series over different monomial bases")
    D = p.d * q.d // math.gcd(p.d, q.d)
    return lift(p, D), lift(q, D)


def series_add(p: StrongSeriesT, q: StrongSeriesT) -> StrongSeriesT:
    p, q = _common(p, q)

    def rule(i):
        a, b = p.coeff(i), q.coeff(i)
        if a is None:
            return b
        if b is None:
            return a
        return a + b
    poles = None
    if p._declared_poles is not None and q._declared_poles is not None:
        poles = p._declared_poles | q._declared_poles
    return StrongSeriesT(p.d, p.bases, rule, min(p.M, q.M), max(p.ratio, q.ratio), poles)


def series_scale(p: StrongSeriesT, c) -> StrongSeriesT:
    if not isinstance(c, Coef):
        c = Coef.of(c) if not isinstance(c, XExpr) else Coef.of(None, c)

    def rule(i):
        a = p.coeff(i)
        return None if a is None else a * c
    return StrongSeriesT(p.d, p.bases, rule, p.M, p.ratio, p._declared_poles)


def _dict_mul(a: dict, b: dict, M: int) -> dict:
    out: dict = {}
    for i, ca in a.items():
        for j, cb in b.items():
            k = tuple(x + y for x, y in zip(i, j))
            if max(k, default=0) > M:
                continue
            prod_ = ca * cb
            out[k] = out[k] + prod_ if k in out else prod_
    return {k: v for k, v in out.items() if not v.is_zero()}


def series_mul(p: StrongSeriesT, q: StrongSeriesT) -> StrongSeriesT:
    """Truncated Cauchy product."""
    p, q = _common(p, q)
    M = min(p.M, q.M)
    table = _dict_mul(dict(p.items(M)), dict(q.items(M)), M)
    poles = None
    if p._declared_poles is not None and q._declared_poles is not None:
        poles = p._declared_poles | q._declared_poles
    return StrongSeriesT(p.d, p.bases, lambda i: table.get(i), M, max(p.ratio, q.ratio), poles)


def series_arith(p: StrongSeriesT, q: StrongSeriesT, op: str) -> StrongSeriesT:
    if op == "add":
        return series_add(p, q)
    if op == "mul":
        return series_mul(p, q)
    raise ValueError(op)


def series_split(phi: StrongSeriesT, pred) -> tuple:
    """(selected, rest) with selected + rest == phi coefficient-wise."""
    def sel(i):
        return phi.coeff(i) if pred(i) else None

    def rest(i):
        return None if pred(i) else phi.coeff(i)
    return (StrongSeriesT(phi.d, phi.bases, sel, phi.M, phi.ratio, phi._declared_poles),
            StrongSeriesT(phi.d, phi.bases, rest, phi.M, phi.ratio, phi._declared_poles))


def _const_abs(c: Coef) -> Optional[float]:
    """|c| if c is an s-free, x-free constant, else None."""
    tot = 0j
    for m, x in c.terms:
        if not m.is_const() or x.__class__.__name__ != "Const":
            return None
        tot += complex(m.const_value()) * complex(x.value)
    return abs(tot)


def unit_power(U: StrongSeriesT, exponent, sup_bound: Optional[float] = None) -> StrongSeriesT:
    """U ** exponent for a strong unit U (|U - 1| <= 1/2 certified).

    ``exponent`` is an ExpCoeff-compatible constant, the string ``"s"``, or a pair
    ``(alpha, beta)`` meaning ``alpha*s + beta``.
    """
    zero = (0,) * U.nvars
    c0 = U.coeff(zero)
    if c0 is None or c0 != Coef.of(1):
        raise UnitCertificationError("unit must have constant term exactly 1")
    F = dict((i, c) for i, c in U.items() if i != zero)
    if sup_bound is None:
        tot = 0.0
        for c in F.values():
            v = _const_abs(c)
            if v is None:
                raise UnitCertificationError(
                    "cannot certify |U-1| <= 1/2 for non-constant coefficients; pass sup_bound")
            tot += v
        if F:
            rho = float(U.ratio)
            tot += max(_const_abs(c) / rho ** max(i) for i, c in F.items()) * tail_factor(U.M, U.nvars, rho) \
                if rho > 0 else 0.0
        sup_bound = tot
    if sup_bound > 0.5:
        raise UnitCertificationError(f"sup|U-1| bound {sup_bound} exceeds 1/2")
    if exponent == "s":
        alpha, beta = ONE, EC(0)
    elif isinstance(exponent, tuple):
        alpha, beta = EC(exponent[0]), EC(exponent[1])
    else:
        alpha, beta = EC(0), EC(exponent)
    M = U.M
    result = {zero: Coef.of(1)}
    power = {zero: Coef.of(1)}
    for j in range(1, M + 1):
        power = _dict_mul(power, F, M)
        if not power:
            break
        bj = binomial_poly(j, alpha, beta)
        if bj.is_zero():
            continue
        for k, c in power.items():
            t = c * bj
            result[k] = result[k] + t if k in result else t
    table = {k: v for k, v in result.items() if not v.is_zero()}
    return StrongSeriesT(U.d, U.bases, lambda i: table.get(i), M, U.ratio)


def nested_presentation(xi: dict, c: tuple, gamma: tuple, d: int = 1, M: int = DEFAULT_ORDER,
                        ratio=DEFAULT_RATIO) -> StrongSeriesT:
    """Regroup sum xi[I,J] c**I gamma**J as sum_J (sum_I xi[I,J] c**I) gamma**J.

    ``xi`` maps (I, J) index tuples (|I| = len(c), |J| = len(gamma)) to
    MeroFunctions.  The exponents of c are I/d like those of gamma.
    """
    groups: dict = {}
    for (I, J), m in xi.items():
        m = m if isinstance(m, MeroFunction) else MeroFunction.const(m)
        xe = mul(*[pow_(ck, EC(Fraction(ik, d))) for ck, ik in zip(c, I)]) if c else X_ONE
        groups.setdefault(tuple(J), []).append((m, xe))
    table = {J: Coef(t) for J, t in groups.items()}
    return StrongSeriesT(d, tuple(gamma), lambda J: table.get(J), M, ratio)


def flat_evaluate(xi: dict, c: tuple, gamma: tuple, d: int, s: complex, env) -> complex:
    """Direct evaluation of sum xi[I,J] c**(I/d) gamma**(J/d); oracle for nesting."""
    cv = [float(np.real(ck.evaluate(env, s))) for ck in c]
    gv = [float(np.real(g.evaluate(env, s))) for g in gamma]
    tot = 0j
    for (I, J), m in xi.items():
        m = m if isinstance(m, MeroFunction) else MeroFunction.const(m)
        t = m.evalf(s)
        for v, i in zip(cv, I):
            t *= v ** (i / d)
        for v, j in zip(gv, J):
            t *= v ** (j / d)
        tot += t
    return tot


__all__ = [
    "Coef", "StrongSeriesT", "DEFAULT_ORDER", "DEFAULT_RATIO", "tail_factor",
    "constant_series", "one_series", "from_dict", "series_eval", "lift",
    "series_add", "series_scale", "series_mul", "series_arith", "series_split",
    "unit_power", "nested_presentation", "flat_evaluate",
]
