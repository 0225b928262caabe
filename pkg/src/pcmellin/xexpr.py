"""Expression trees in the real variables (x_1..x_m, and y inside series bases).

Nodes are immutable and built through the canonicalising constructors
(:func:`add`, :func:`mul`, :func:`pow_` ...).  Two expressions that simplify to
the same canonical tree print identically, which is what the golden tests
compare.

Domain convention: the base of a non-integer power (and each multiplicative
factor of such a base) is assumed positive on the cell.  Evaluation checks it.
"""
from __future__ import annotations

from fractions import Fraction
from typing import Mapping

import numpy as np
from mpmath import iv

from .errors import DomainError, NotRepresentable
from .scalars import EC, ONE, ZERO, ExpCoeff, linform_str


class XExpr:
    __slots__ = ("_key", "_str")

    def key(self):
        if self._key is None:
            self._key = self._mkkey()
        return self._key

    def __eq__(self, o):
        return isinstance(o, XExpr) and self.key() == o.key()

    def __hash__(self):
        return hash(self.key())

    def __str__(self):
        if self._str is None:
            self._str = self._render()
        return self._str

    def __repr__(self):
        return f"XExpr({self})"

    # evaluation --------------------------------------------------------
    def evaluate(self, env: Mapping, s=0j, memo=None):
        if memo is None:
            memo = {}
        k = id(self)
        if k in memo:
            return memo[k]
        v = self._ev(env, s, memo)
        memo[k] = v
        return v

    def __call__(self, env: Mapping, s=0j):
        return self.evaluate(env, s)

    # operator sugar ----------------------------------------------------
    def __add__(self, o):
        return add(self, _x(o))

    def __radd__(self, o):
        return add(_x(o), self)

    def __sub__(self, o):
        return add(self, neg(_x(o)))

    def __rsub__(self, o):
        return add(_x(o), neg(self))

    def __mul__(self, o):
        return mul(self, _x(o))

    def __rmul__(self, o):
        return mul(_x(o), self)

    def __truediv__(self, o):
        return div(self, _x(o))

    def __rtruediv__(self, o):
        return div(_x(o), self)

    def __neg__(self):
        return neg(self)

    def __pow__(self, e):
        return pow_(self, e)


class Const(XExpr):
    __slots__ = ("value",)

    def __init__(self, value):
        self.value = EC(value)
        self._key = None
        self._str = None

    def _mkkey(self):
        return ("c", self.value)

    def _render(self):
        return str(self.value)

    def _ev(self, env, s, memo):
        v = complex(self.value)
        return v.real if v.imag == 0 else v

    def children(self):
        return ()


class Var(XExpr):
    __slots__ = ("name",)

    def __init__(self, name: str):
        self.name = name
        self._key = None
        self._str = None

    def _mkkey(self):
        return ("v", self.name)

    def _render(self):
        return self.name

    def _ev(self, env, s, memo):
        try:
            return env[self.name]
        except KeyError:
            raise DomainError(f"no value for variable {self.name}") from None

    def children(self):
        return ()


class Add(XExpr):
    __slots__ = ("terms",)

    def __init__(self, terms):
        self.terms = tuple(terms)
        self._key = None
        self._str = None

    def _mkkey(self):
        return ("+",) + tuple(t.key() for t in self.terms)

    def _render(self):
        out = str(self.terms[0])
        for t in self.terms[1:]:
            r = str(t)
            out += r if r.startswith("-") else "+" + r
        return out

    def _ev(self, env, s, memo):
        tot = 0
        for t in self.terms:
            tot = tot + t.evaluate(env, s, memo)
        return tot

    def children(self):
        return self.terms


class Mul(XExpr):
    __slots__ = ("factors",)

    def __init__(self, factors):
        self.factors = tuple(factors)
        self._key = None
        self._str = None

    def _mkkey(self):
        return ("*",) + tuple(f.key() for f in self.factors)

    def _render(self):
        parts = []
        lead = ""
        for f in self.factors:
            if isinstance(f, Const):
                if f.value == -ONE:
                    lead = "-"
                    continue
                r = str(f.value)
                if r.startswith("-") and f.value.is_rational():
                    lead = "-"
                    r = r[1:]
                parts.append(r)
            elif isinstance(f, Add):
                parts.append(f"({f})")
            else:
                parts.append(str(f))
        return lead + "*".join(parts)

    def _ev(self, env, s, memo):
        tot = 1
        for f in self.factors:
            tot = tot * f.evaluate(env, s, memo)
        return tot

    def children(self):
        return self.factors


def _is_int(e: ExpCoeff) -> bool:
    return e.is_gauss() and e.gauss().im == 0 and e.gauss().re.denominator == 1


class Pow(XExpr):
    """base ** (sexp*s + exp)."""

    __slots__ = ("base", "exp", "sexp")

    def __init__(self, base, exp, sexp=ZERO):
        self.base = base
        self.exp = EC(exp)
        self.sexp = EC(sexp)
        self._key = None
        self._str = None

    def _mkkey(self):
        return ("^", self.base.key(), self.exp, self.sexp)

    def integral(self) -> bool:
        return self.sexp.is_zero() and _is_int(self.exp)

    def _render(self):
        b = str(self.base)
        if isinstance(self.base, (Add, Mul, Pow)) or (isinstance(self.base, Const) and (
                b.startswith("-") or "/" in b or "*" in b)):
            b = f"({b})"
        e = linform_str(self.sexp, self.exp)
        simple = (self.sexp.is_zero() and _is_int(self.exp) and self.exp.gauss().re >= 0) or e == "s"
        return f"{b}^{e}" if simple else f"{b}^({e})"

    def _ev(self, env, s, memo):
        v = self.base.evaluate(env, s, memo)
        if self.integral():
            k = int(self.exp.gauss().re)
            if k < 0:
                if np.any(np.asarray(v) == 0):
                    raise DomainError(f"division by zero in {self}")
                return 1.0 / (v ** (-k))
            return v ** k
        va = np.asarray(v)
        if np.iscomplexobj(va):
            if np.any(np.abs(va.imag) > 1e-12 * (1 + np.abs(va.real))):
                raise DomainError(f"complex base in {self}")
            va = va.real
        if np.any(va <= 0):
            raise DomainError(f"non-positive base in {self}")
        z = complex(self.sexp) * s + complex(self.exp)
        out = np.exp(z * np.log(va))
        if np.ndim(out) == 0:
            out = complex(out)
            return out.real if out.imag == 0 else out
        return out

    def children(self):
        return (self.base,)


class Log(XExpr):
    __slots__ = ("arg",)

    def __init__(self, arg):
        self.arg = arg
        self._key = None
        self._str = None

    def _mkkey(self):
        return ("log", self.arg.key())

    def _render(self):
        return f"log({self.arg})"

    def _ev(self, env, s, memo):
        v = self.arg.evaluate(env, s, memo)
        va = np.asarray(v)
        if np.iscomplexobj(va):
            va = va.real
        if np.any(va <= 0):
            raise DomainError(f"log of non-positive value in {self}")
        out = np.log(va)
        return float(out) if np.ndim(out) == 0 else out

    def children(self):
        return (self.arg,)


class Abs(XExpr):
    __slots__ = ("arg",)

    def __init__(self, arg):
        self.arg = arg
        self._key = None
        self._str = None

    def _mkkey(self):
        return ("abs", self.arg.key())

    def _render(self):
        return f"abs({self.arg})"

    def _ev(self, env, s, memo):
        v = np.abs(self.arg.evaluate(env, s, memo))
        return float(v) if np.ndim(v) == 0 else v

    def children(self):
        return (self.arg,)


# ---------------------------------------------------------------------------
# canonicalising constructors

X_ZERO = Const(0)
X_ONE = Const(1)


def _x(o) -> XExpr:
    if isinstance(o, XExpr):
        return o
    return Const(o)


def const(c) -> XExpr:
    return Const(c)


def var(name: str) -> XExpr:
    return Var(name)


def _split_coeff(t: XExpr):
    """t = c * rest with c an exact constant."""
    if isinstance(t, Const):
        return t.value, X_ONE
    if isinstance(t, Mul) and isinstance(t.factors[0], Const):
        rest = t.factors[1:]
        return t.factors[0].value, rest[0] if len(rest) == 1 else Mul(rest)
    return ONE, t


def add(*xs) -> XExpr:
    flat = []
    for x in xs:
        x = _x(x)
        if isinstance(x, Add):
            flat.extend(x.terms)
        else:
            flat.append(x)
    coeffs: dict = {}
    order = []
    for t in flat:
        c, rest = _split_coeff(t)
        k = rest.key()
        if k in coeffs:
            coeffs[k] = (coeffs[k][0] + c, rest)
        else:
            coeffs[k] = (c, rest)
            order.append(k)
    terms = []
    for k in order:
        c, rest = coeffs[k]
        if c.is_zero():
            continue
        terms.append(_scale(rest, c))
    if not terms:
        return X_ZERO
    if len(terms) == 1:
        return terms[0]
    terms.sort(key=lambda t: (isinstance(t, Const), str(_split_coeff(t)[1]), str(t)))
    return Add(terms)


def _scale(rest: XExpr, c: ExpCoeff) -> XExpr:
    if rest == X_ONE:
        return Const(c)
    if c == ONE:
        return rest
    if isinstance(rest, Mul):
        return Mul((Const(c),) + rest.factors)
    return Mul((Const(c), rest))


def mul(*xs) -> XExpr:
    flat = []
    for x in xs:
        x = _x(x)
        if isinstance(x, Mul):
            flat.extend(x.factors)
        else:
            flat.append(x)
    c = ONE
    powers: dict = {}
    order = []
    for f in flat:
        if isinstance(f, Const):
            c = c * f.value
            continue
        if isinstance(f, Pow):
            b, e, se = f.base, f.exp, f.sexp
        else:
            b, e, se = f, ONE, ZERO
        k = b.key()
        if k in powers:
            ob, oe, ose = powers[k]
            powers[k] = (ob, oe + e, ose + se)
        else:
            powers[k] = (b, e, se)
            order.append(k)
    if c.is_zero():
        return X_ZERO
    factors = []
    for k in order:
        b, e, se = powers[k]
        p = pow_(b, e, se)
        if isinstance(p, Const):
            c = c * p.value
        elif isinstance(p, Mul):
            for g in p.factors:
                if isinstance(g, Const):
                    c = c * g.value
                else:
                    factors.append(g)
        else:
            factors.append(p)
    if c.is_zero():
        return X_ZERO
    if not factors:
        return Const(c)
    if len(factors) == 1 and isinstance(factors[0], Add) and c != ONE:
        return add(*[mul(Const(c), t) for t in factors[0].terms])
    # merging can expose new same-base pairs (distributed powers)
    keys = [(f.base.key() if isinstance(f, Pow) else f.key()) for f in factors]
    if len(set(keys)) != len(keys):
        return mul(Const(c), *factors)
    factors.sort(key=str)
    if c == ONE and len(factors) == 1:
        return factors[0]
    if c == ONE:
        return Mul(factors)
    return Mul([Const(c)] + factors)


def pow_(b, e=ONE, se=ZERO) -> XExpr:
    b = _x(b)
    e, se = EC(e), EC(se)
    if e.is_zero() and se.is_zero():
        return X_ONE
    if e == ONE and se.is_zero():
        return b
    int_exp = se.is_zero() and _is_int(e)
    if isinstance(b, Const):
        if b.value == ONE:
            return X_ONE
        if int_exp:
            k = int(e.gauss().re)
            try:
                return Const(b.value ** k)
            except (NotRepresentable, ZeroDivisionError):
                pass
        return Pow(b, e, se)
    if isinstance(b, Pow):
        inner_real = b.sexp.is_zero() and b.exp.is_gauss() and b.exp.gauss().im == 0
        if int_exp or inner_real:
            return pow_(b.base, b.exp * e, b.exp * se + b.sexp * e) if inner_real else \
                pow_(b.base, b.exp * e, b.sexp * e)
        return Pow(b, e, se)
    if isinstance(b, Mul):
        cpart = b.factors[0].value if isinstance(b.factors[0], Const) else ONE
        positive = cpart.is_rational() and cpart.rational() > 0
        if int_exp or positive:
            return mul(*[pow_(f, e, se) for f in b.factors])
        return Pow(b, e, se)
    return Pow(b, e, se)


def neg(x) -> XExpr:
    return mul(Const(-1), x)


def sub(x, y) -> XExpr:
    return add(x, neg(y))


def div(x, y) -> XExpr:
    return mul(x, pow_(y, -1))


def log_(x) -> XExpr:
    x = _x(x)
    if x == X_ONE:
        return X_ZERO
    return Log(x)


def abs_(x) -> XExpr:
    x = _x(x)
    if isinstance(x, Const) and x.value.is_rational():
        return Const(abs(x.value.rational()))
    if isinstance(x, Abs):
        return x
    return Abs(x)


def spow(b, alpha) -> XExpr:
    """Parametric power b ** (alpha*s)."""
    return pow_(b, ZERO, EC(alpha))


# ---------------------------------------------------------------------------
# traversal

def free_vars(x: XExpr) -> frozenset:
    if isinstance(x, Var):
        return frozenset([x.name])
    out = frozenset()
    for c in x.children():
        out |= free_vars(c)
    return out


def depends_on_s(x: XExpr) -> bool:
    if isinstance(x, Pow) and not x.sexp.is_zero():
        return True
    return any(depends_on_s(c) for c in x.children())


def subs(x: XExpr, mapping: Mapping[str, XExpr]) -> XExpr:
    if isinstance(x, Var):
        return _x(mapping[x.name]) if x.name in mapping else x
    if isinstance(x, Const):
        return x
    if isinstance(x, Add):
        return add(*[subs(t, mapping) for t in x.terms])
    if isinstance(x, Mul):
        return mul(*[subs(t, mapping) for t in x.factors])
    if isinstance(x, Pow):
        return pow_(subs(x.base, mapping), x.exp, x.sexp)
    if isinstance(x, Log):
        return log_(subs(x.arg, mapping))
    if isinstance(x, Abs):
        return abs_(subs(x.arg, mapping))
    raise TypeError(type(x))


def specialize_s(x: XExpr, s0: ExpCoeff) -> XExpr:
    """Replace the parameter s by the exact value s0."""
    if isinstance(x, (Var, Const)):
        return x
    if isinstance(x, Add):
        return add(*[specialize_s(t, s0) for t in x.terms])
    if isinstance(x, Mul):
        return mul(*[specialize_s(t, s0) for t in x.factors])
    if isinstance(x, Pow):
        return pow_(specialize_s(x.base, s0), x.exp + x.sexp * s0, ZERO)
    if isinstance(x, Log):
        return log_(specialize_s(x.arg, s0))
    if isinstance(x, Abs):
        return abs_(specialize_s(x.arg, s0))
    raise TypeError(type(x))


def nonzero_structural(x: XExpr) -> bool:
    """True when x cannot vanish on its domain (conservative)."""
    if isinstance(x, Const):
        return not x.value.is_zero()
    if isinstance(x, Pow):
        if not x.integral():
            return True  # base positive by the domain convention
        return int(x.exp.gauss().re) < 0 or nonzero_structural(x.base)
    if isinstance(x, Mul):
        return all(nonzero_structural(f) for f in x.factors)
    if isinstance(x, Abs):
        return nonzero_structural(x.arg)
    return False


# ---------------------------------------------------------------------------
# interval evaluation over a box (for certification)

def _iv_pow(v, e: ExpCoeff):
    if not e.is_rational():
        raise NotRepresentable("interval power needs a real rational exponent")
    q = e.rational()
    if q.denominator == 1:
        k = int(q)
        if k >= 0:
            if k % 2 == 0 and v.a < 0 < v.b:
                hi = max(abs(v.a), abs(v.b)) ** k
                return iv.mpf([0, hi])
            return v ** k
        if v.a <= 0 <= v.b:
            raise DomainError("interval contains zero under negative power")
        return 1 / (v ** (-k))
    if v.a <= 0:
        raise DomainError("interval power of non-positive range")
    return iv.exp(iv.log(v) * (iv.mpf(q.numerator) / q.denominator))


def interval_eval(x: XExpr, box: Mapping[str, tuple]):
    """Enclosure of the real expression x over the box (mpmath interval)."""
    if isinstance(x, Const):
        if not x.value.is_gauss():
            re, im = x.value.enclose(64)
            return re
        g = x.value.gauss()
        if g.im != 0:
            raise NotRepresentable("complex constant in real interval evaluation")
        return iv.mpf(g.re.numerator) / g.re.denominator
    if isinstance(x, Var):
        lo, hi = box[x.name]
        return iv.mpf([lo, hi])
    if isinstance(x, Add):
        out = iv.mpf(0)
        for t in x.terms:
            out = out + interval_eval(t, box)
        return out
    if isinstance(x, Mul):
        out = iv.mpf(1)
        for t in x.factors:
            out = out * interval_eval(t, box)
        return out
    if isinstance(x, Pow):
        if not x.sexp.is_zero():
            raise NotRepresentable("parametric power in real interval evaluation")
        return _iv_pow(interval_eval(x.base, box), x.exp)
    if isinstance(x, Log):
        v = interval_eval(x.arg, box)
        if v.a <= 0:
            raise DomainError("log of non-positive range")
        return iv.log(v)
    if isinstance(x, Abs):
        v = interval_eval(x.arg, box)
        if v.a >= 0:
            return v
        if v.b <= 0:
            return -v
        return iv.mpf([0, max(abs(v.a), abs(v.b))])
    raise TypeError(type(x))


def _split_boxes(box, depth):
    boxes = [dict(box)]
    names = sorted(box)
    for level in range(depth):
        name = names[level % len(names)] if names else None
        if name is None:
            break
        nxt = []
        for b in boxes:
            lo, hi = b[name]
            mid = (lo + hi) / 2
            left, right = dict(b), dict(b)
            left[name] = (lo, mid)
            right[name] = (mid, hi)
            nxt += [left, right]
        boxes = nxt
    return boxes


def certify_upper(x: XExpr, box, bound, depth: int = 6) -> bool:
    """Certify x <= bound on the box, bisecting up to 2**depth sub-boxes."""
    for d in range(depth + 1):
        try:
            if all(float(interval_eval(x, b).b) <= bound for b in _split_boxes(box, d)):
                return True
        except DomainError:
            return False
    return False


def certify_lower(x: XExpr, box, bound, depth: int = 6, strict=False) -> bool:
    for d in range(depth + 1):
        try:
            vals = [float(interval_eval(x, b).a) for b in _split_boxes(box, d)]
        except DomainError:
            return False
        if all((v > bound) if strict else (v >= bound) for v in vals):
            return True
    return False


def rational_of(x: XExpr):
    """Fraction if x is a real rational constant, else None."""
    if isinstance(x, Const) and x.value.is_rational():
        return x.value.rational()
    return None


__all__ = [
    "XExpr", "Const", "Var", "Add", "Mul", "Pow", "Log", "Abs",
    "X_ZERO", "X_ONE", "const", "var", "add", "mul", "pow_", "neg", "sub", "div",
    "log_", "abs_", "spow", "free_vars", "depends_on_s", "subs", "specialize_s",
    "nonzero_structural", "interval_eval", "certify_upper", "certify_lower",
    "rational_of", "Fraction",
]
