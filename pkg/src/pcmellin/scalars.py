"""Exact scalars: exponents in Q(i)[named real constants] and rational functions of s.

An :class:`ExpCoeff` is a finite Q(i)-linear combination of monomials in named
real constants (``sqrt``, ``log`` or ``exp`` of a rational).  Equality is
structural.  Sign and integrality questions go through interval enclosures with
a precision-doubling loop; the cap comes from ``MF_PRECISION_BITS``.

A :class:`MeroFunction` is ``numer(s) / prod (alpha*s + beta)**m`` kept in a
reduced canonical form.
"""
from __future__ import annotations

import math
import os
import threading
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from mpmath import iv

from .errors import NotRepresentable, UndecidableComparison


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        # decimal reading, not the binary expansion
        return Fraction(repr(x))
    return Fraction(x)


class GQ:
    """Gaussian rational re + im*i."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        self.re = _frac(re)
        self.im = _frac(im)

    def __add__(self, o):
        return GQ(self.re + o.re, self.im + o.im)

    def __sub__(self, o):
        return GQ(self.re - o.re, self.im - o.im)

    def __mul__(self, o):
        return GQ(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)

    def __neg__(self):
        return GQ(-self.re, -self.im)

    def inv(self):
        n = self.re * self.re + self.im * self.im
        if n == 0:
            raise ZeroDivisionError("GQ inverse of zero")
        return GQ(self.re / n, -self.im / n)

    def __truediv__(self, o):
        return self * o.inv()

    def __eq__(self, o):
        return isinstance(o, GQ) and self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def is_zero(self):
        return self.re == 0 and self.im == 0

    def conj(self):
        return GQ(self.re, -self.im)

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __repr__(self):
        return f"GQ({self.re}, {self.im})"

    def __str__(self):
        if self.im == 0:
            return str(self.re)
        im = "i" if self.im == 1 else "-i" if self.im == -1 else f"{self.im}*i"
        if self.re == 0:
            return im
        sep = "" if im.startswith("-") else "+"
        return f"({self.re}{sep}{im})"


# ---------------------------------------------------------------------------
# named constants

@dataclass(frozen=True)
class ConstDef:
    name: str
    kind: str  # sqrt | log | exp
    arg: Fraction


_CONSTS: dict[str, ConstDef] = {}
_IV_LOCK = threading.Lock()
_FLOAT_CACHE: dict[str, float] = {}


def precision_cap() -> int:
    try:
        return max(64, int(os.environ.get("MF_PRECISION_BITS", "1024")))
    except ValueError:
        return 1024


def declare_constant(name: str, kind: str, arg) -> "ExpCoeff":
    """Register a named real constant and return it as an ExpCoeff."""
    arg = _frac(arg)
    if kind not in ("sqrt", "log", "exp"):
        raise ValueError(f"unknown constant kind {kind!r}")
    if kind == "sqrt" and arg <= 0:
        raise ValueError("sqrt constant needs a positive argument")
    if kind == "log" and arg <= 0:
        raise ValueError("log constant needs a positive argument")
    new = ConstDef(name, kind, arg)
    old = _CONSTS.get(name)
    if old is not None and old != new:
        raise ValueError(f"constant {name} already declared as {old.kind}({old.arg})")
    _CONSTS[name] = new
    return ExpCoeff({((name, 1),): GQ(1)})


def constant_def(name: str) -> ConstDef:
    return _CONSTS[name]


def _const_iv(name: str):
    c = _CONSTS[name]
    x = iv.mpf(c.arg.numerator) / c.arg.denominator
    if c.kind == "sqrt":
        return iv.sqrt(x)
    if c.kind == "log":
        return iv.log(x)
    return iv.exp(x)


def _const_float(name: str) -> float:
    v = _FLOAT_CACHE.get(name)
    if v is None:
        c = _CONSTS[name]
        a = float(c.arg)
        v = math.sqrt(a) if c.kind == "sqrt" else math.log(a) if c.kind == "log" else math.exp(a)
        _FLOAT_CACHE[name] = v
    return v


def _mono_mul(m1, m2):
    """Multiply two constant monomials; returns (rational factor, monomial)."""
    powers = dict(m1)
    for n, p in m2:
        powers[n] = powers.get(n, 0) + p
    factor = Fraction(1)
    out = []
    for n in sorted(powers):
        p = powers[n]
        c = _CONSTS[n]
        if c.kind == "sqrt" and p >= 2:
            factor *= c.arg ** (p // 2)
            p = p % 2
        if p:
            out.append((n, p))
    return factor, tuple(out)


def _mono_str(m):
    return "*".join(n if p == 1 else f"{n}^{p}" for n, p in m)


# ---------------------------------------------------------------------------

class ExpCoeff:
    """Exact element of Q(i)[c_1..c_k]; the c_j are declared real constants."""

    __slots__ = ("terms", "_h")

    def __init__(self, terms=None):
        if terms is None:
            terms = {}
        if isinstance(terms, dict):
            items = [(m, q) for m, q in terms.items() if not q.is_zero()]
            items.sort(key=lambda t: t[0])
            terms = tuple(items)
        self.terms = terms
        self._h = None

    # construction -----------------------------------------------------
    @staticmethod
    def of(x) -> "ExpCoeff":
        if isinstance(x, ExpCoeff):
            return x
        if isinstance(x, GQ):
            return ExpCoeff({(): x})
        if isinstance(x, complex):
            return ExpCoeff({(): GQ(_frac(x.real), _frac(x.imag))})
        if isinstance(x, str):
            return ExpCoeff({(): GQ(Fraction(x))})
        return ExpCoeff({(): GQ(_frac(x))})

    @staticmethod
    def gaussian(re, im=0) -> "ExpCoeff":
        return ExpCoeff({(): GQ(re, im)})

    # structure --------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def is_gauss(self) -> bool:
        return all(m == () for m, _ in self.terms)

    def gauss(self) -> GQ:
        if not self.is_gauss():
            raise NotRepresentable(f"{self} is not a Gaussian rational")
        return self.terms[0][1] if self.terms else GQ(0)

    def is_rational(self) -> bool:
        return self.is_gauss() and self.gauss().im == 0

    def rational(self) -> Fraction:
        g = self.gauss()
        if g.im != 0:
            raise NotRepresentable(f"{self} is not real rational")
        return g.re

    def names(self) -> set:
        return {n for m, _ in self.terms for n, _ in m}

    def lead(self) -> GQ:
        return self.terms[0][1]

    # arithmetic -------------------------------------------------------
    def _dict(self):
        return dict(self.terms)

    def __add__(self, o):
        o = ExpCoeff.of(o)
        d = self._dict()
        for m, q in o.terms:
            d[m] = d[m] + q if m in d else q
        return ExpCoeff(d)

    __radd__ = __add__

    def __neg__(self):
        return ExpCoeff(tuple((m, -q) for m, q in self.terms))

    def __sub__(self, o):
        return self + (-ExpCoeff.of(o))

    def __rsub__(self, o):
        return ExpCoeff.of(o) - self

    def __mul__(self, o):
        o = ExpCoeff.of(o)
        if not self.terms or not o.terms:
            return ExpCoeff()
        if self.is_gauss() and o.is_gauss():
            return ExpCoeff({(): self.gauss() * o.gauss()})
        d: dict = {}
        for m1, q1 in self.terms:
            for m2, q2 in o.terms:
                f, m = _mono_mul(m1, m2)
                q = q1 * q2 * GQ(f)
                d[m] = d[m] + q if m in d else q
        return ExpCoeff(d)

    __rmul__ = __mul__

    def scale(self, q: GQ) -> "ExpCoeff":
        return ExpCoeff(tuple((m, c * q) for m, c in self.terms)) if not q.is_zero() else ExpCoeff()

    def __truediv__(self, o):
        o = ExpCoeff.of(o)
        if o.is_zero():
            raise ZeroDivisionError("division by zero ExpCoeff")
        if o.is_gauss():
            return self.scale(o.gauss().inv())
        # exact scalar multiple?
        lam = self.terms[0][1] / o.terms[0][1] if self.terms else GQ(0)
        cand = o.scale(lam)
        if cand == self:
            return ExpCoeff.of(lam)
        raise NotRepresentable(f"cannot divide {self} by {o} exactly")

    def __rtruediv__(self, o):
        return ExpCoeff.of(o) / self

    def __pow__(self, k: int):
        if not isinstance(k, int):
            raise NotRepresentable("only integer powers of ExpCoeff")
        if k < 0:
            return ExpCoeff.of(1) / (self ** (-k))
        out = ExpCoeff.of(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def re(self) -> "ExpCoeff":
        return ExpCoeff(tuple((m, GQ(q.re)) for m, q in self.terms if q.re != 0))

    def im(self) -> "ExpCoeff":
        return ExpCoeff(tuple((m, GQ(q.im)) for m, q in self.terms if q.im != 0))

    def conj(self) -> "ExpCoeff":
        return ExpCoeff(tuple((m, q.conj()) for m, q in self.terms))

    # comparison -------------------------------------------------------
    def __eq__(self, o):
        if not isinstance(o, ExpCoeff):
            try:
                o = ExpCoeff.of(o)
            except (TypeError, ValueError):
                return NotImplemented
        return self.terms == o.terms

    def __hash__(self):
        if self._h is None:
            self._h = hash(tuple((m, q.re, q.im) for m, q in self.terms))
        return self._h

    def sortkey(self):
        return tuple((m, q.re, q.im) for m, q in self.terms)

    # numerics ---------------------------------------------------------
    def __complex__(self):
        if self.is_gauss():
            return complex(self.gauss())
        tot = 0j
        for m, q in self.terms:
            v = 1.0
            for n, p in m:
                v *= _const_float(n) ** p
            tot += complex(q) * v
        return tot

    def to_complex(self) -> complex:
        return complex(self)

    def enclose(self, bits: int):
        """Interval enclosures (re, im) at the given working precision."""
        with _IV_LOCK:
            old = iv.prec
            iv.prec = bits
            try:
                re = iv.mpf(0)
                im = iv.mpf(0)
                for m, q in self.terms:
                    v = iv.mpf(1)
                    for n, p in m:
                        v = v * _const_iv(n) ** p
                    if q.re:
                        re = re + v * iv.mpf(q.re.numerator) / q.re.denominator
                    if q.im:
                        im = im + v * iv.mpf(q.im.numerator) / q.im.denominator
                return re, im
            finally:
                iv.prec = old

    def _refine(self, decide, part: str):
        bits = 64
        cap = precision_cap()
        while True:
            re, im = self.enclose(bits)
            r = decide(re if part == "re" else im)
            if r is not None:
                return r
            if bits >= cap:
                raise UndecidableComparison(
                    f"cannot decide {part}({self}) at {cap} bits")
            bits = min(cap, bits * 2)

    def sign_re(self) -> int:
        r = self.re()
        if r.is_zero():
            return 0
        if r.is_gauss():
            v = r.gauss().re
            return (v > 0) - (v < 0)

        def dec(x):
            if x.a > 0:
                return 1
            if x.b < 0:
                return -1
            return None
        return self._refine(dec, "re")

    def sign_im(self) -> int:
        return (self * ExpCoeff.gaussian(0, -1)).sign_re()

    def im_is_zero(self) -> bool:
        return self.sign_im() == 0

    def floor_re(self) -> int:
        r = self.re()
        if r.is_gauss():
            return math.floor(r.gauss().re)

        def dec(x):
            lo = math.floor(float(x.a)) if abs(float(x.a)) < 2**52 else None
            if lo is None:
                return None
            # the enclosure must sit strictly inside (n, n+1)
            if x.a > lo and x.b < lo + 1:
                return lo
            return None
        return self._refine(dec, "re")

    def re_is_integer(self) -> bool:
        """Is Re(self) an integer?  Exact for Gaussian values, interval otherwise."""
        r = self.re()
        if r.is_gauss():
            return r.gauss().re.denominator == 1
        self.floor_re()  # raises if the enclosure keeps straddling an integer
        return False

    def is_integer(self) -> bool:
        if self.is_gauss():
            g = self.gauss()
            return g.im == 0 and g.re.denominator == 1
        if not self.im_is_zero():
            return False
        return self.re_is_integer()

    # text -------------------------------------------------------------
    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for m, q in self.terms:
            if m == ():
                parts.append(str(q))
            elif q == GQ(1):
                parts.append(_mono_str(m))
            elif q == GQ(-1):
                parts.append("-" + _mono_str(m))
            else:
                parts.append(f"{q}*{_mono_str(m)}")
        if len(parts) == 1:
            return parts[0]
        out = parts[0]
        for p in parts[1:]:
            out += p if p.startswith("-") else "+" + p
        return f"({out})"

    def __repr__(self):
        return f"ExpCoeff({self})"

    def to_json(self) -> dict:
        g = GQ(0)
        irr = {}
        for m, q in self.terms:
            if m == ():
                g = q
            else:
                key = _mono_str(m)
                v = [q.re.numerator, q.re.denominator]
                if q.im:
                    v += [q.im.numerator, q.im.denominator]
                irr[key] = v
        return {"re_num": g.re.numerator, "re_den": g.re.denominator,
                "im_num": g.im.numerator, "im_den": g.im.denominator, "irr": irr}

    @staticmethod
    def from_json(obj: dict) -> "ExpCoeff":
        d = {(): GQ(Fraction(obj["re_num"], obj["re_den"]),
                    Fraction(obj["im_num"], obj["im_den"]))}
        for key, v in obj.get("irr", {}).items():
            mono = []
            for part in key.split("*"):
                n, _, p = part.partition("^")
                mono.append((n, int(p) if p else 1))
            im = Fraction(v[2], v[3]) if len(v) > 2 else 0
            d[tuple(sorted(mono))] = GQ(Fraction(v[0], v[1]), im)
        return ExpCoeff(d)


EC = ExpCoeff.of
ZERO = ExpCoeff()
ONE = EC(1)
I_UNIT = ExpCoeff.gaussian(0, 1)


def linform_str(alpha: ExpCoeff, beta: ExpCoeff, var: str = "s") -> str:
    """Canonical text for alpha*var + beta."""
    if alpha.is_zero():
        return str(beta)
    if alpha == ONE:
        head = var
    elif alpha == -ONE:
        head = "-" + var
    else:
        head = f"{alpha}*{var}"
    if beta.is_zero():
        return head
    b = str(beta)
    return head + (b if b.startswith("-") else "+" + b)


# ---------------------------------------------------------------------------
# polynomials over ExpCoeff (coefficient lists, low degree first)

def _ptrim(p):
    p = list(p)
    while p and p[-1].is_zero():
        p.pop()
    return p


def padd(p, q):
    n = max(len(p), len(q))
    return _ptrim([(p[i] if i < len(p) else ZERO) + (q[i] if i < len(q) else ZERO)
                   for i in range(n)])


def pmul(p, q):
    if not p or not q:
        return []
    out = [ZERO] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a.is_zero():
            continue
        for j, b in enumerate(q):
            out[i + j] = out[i + j] + a * b
    return _ptrim(out)


def pscale(p, c: ExpCoeff):
    return _ptrim([a * c for a in p])


def peval(p, x: ExpCoeff) -> ExpCoeff:
    acc = ZERO
    for a in reversed(p):
        acc = acc * x + a
    return acc


def psynth(p, r: ExpCoeff):
    """Divide p by (s - r); returns (quotient, remainder)."""
    if not p:
        return [], ZERO
    q = [ZERO] * (len(p) - 1)
    acc = ZERO
    for i in range(len(p) - 1, -1, -1):
        acc = acc * r + p[i]
        if i > 0:
            q[i - 1] = acc
    return _ptrim(q), acc


def pdiv_linear(p, alpha: ExpCoeff, beta: ExpCoeff):
    """Exact division of p by alpha*s + beta, or None if it does not divide."""
    p = list(p)
    if not p:
        return []
    q = [ZERO] * (len(p) - 1)
    try:
        for i in range(len(p) - 1, 0, -1):
            c = p[i] / alpha
            q[i - 1] = c
            p[i] = ZERO
            p[i - 1] = p[i - 1] - c * beta
    except NotRepresentable:
        return None
    return _ptrim(q) if p[0].is_zero() else None


def _lin_pow(alpha, beta, m):
    out = [ONE]
    for _ in range(m):
        out = pmul(out, _ptrim([beta, alpha]))
    return out


# ---------------------------------------------------------------------------

class MeroFunction:
    """Rational function of s with linear denominator factors, canonical form."""

    __slots__ = ("numer", "denom", "_h", "_fl")

    def __init__(self, numer: Sequence = (), denom: Iterable = (), _raw=False):
        if _raw:
            self.numer = tuple(numer)
            self.denom = tuple(denom)
        else:
            n, d = _normalize(list(numer), list(denom))
            self.numer, self.denom = tuple(n), tuple(d)
        self._h = None
        self._fl = None

    # constructors -----------------------------------------------------
    @staticmethod
    def const(c) -> "MeroFunction":
        c = EC(c)
        return MeroFunction((c,), (), _raw=True) if not c.is_zero() else MeroFunction((), (), _raw=True)

    @staticmethod
    def poly(coeffs) -> "MeroFunction":
        return MeroFunction([EC(c) for c in coeffs])

    @staticmethod
    def s() -> "MeroFunction":
        return MeroFunction((ZERO, ONE), (), _raw=True)

    @staticmethod
    def linear_inv(alpha, beta, m: int = 1) -> "MeroFunction":
        """1 / (alpha*s + beta)**m."""
        return MeroFunction((ONE,), (((EC(alpha), EC(beta)), m),))

    # structure --------------------------------------------------------
    def is_zero(self):
        return not self.numer

    def is_const(self):
        return len(self.numer) <= 1 and all(f[0].is_zero() for f, _ in self.denom)

    def const_value(self) -> ExpCoeff:
        if not self.is_const():
            raise NotRepresentable(f"{self} depends on s")
        v = self.numer[0] if self.numer else ZERO
        for (_, be), m in self.denom:
            v = v / be ** m
        return v

    def degree(self) -> int:
        return len(self.numer) - 1

    def pole_factors(self):
        """[(alpha, beta, m)] for factors that actually involve s."""
        return [(a, b, m) for (a, b), m in self.denom if not a.is_zero()]

    # arithmetic -------------------------------------------------------
    def __add__(self, o):
        o = _as_mero(o)
        if self.is_zero():
            return o
        if o.is_zero():
            return self
        da = dict(self.denom)
        db = dict(o.denom)
        common = dict(da)
        for k, m in db.items():
            common[k] = max(common.get(k, 0), m)
        na = list(self.numer)
        for k, m in common.items():
            extra = m - da.get(k, 0)
            if extra:
                na = pmul(na, _lin_pow(k[0], k[1], extra))
        nb = list(o.numer)
        for k, m in common.items():
            extra = m - db.get(k, 0)
            if extra:
                nb = pmul(nb, _lin_pow(k[0], k[1], extra))
        return MeroFunction(padd(na, nb), list(common.items()))

    __radd__ = __add__

    def __neg__(self):
        return MeroFunction(tuple(-c for c in self.numer), self.denom, _raw=True)

    def __sub__(self, o):
        return self + (-_as_mero(o))

    def __rsub__(self, o):
        return _as_mero(o) - self

    def __mul__(self, o):
        o = _as_mero(o)
        if self.is_zero() or o.is_zero():
            return MeroFunction()
        if not o.denom and len(o.numer) == 1:
            c = o.numer[0]
            return MeroFunction(tuple(a * c for a in self.numer), self.denom, _raw=True)
        return MeroFunction(pmul(list(self.numer), list(o.numer)),
                            list(self.denom) + list(o.denom))

    __rmul__ = __mul__

    def div_linear(self, alpha, beta, m: int = 1) -> "MeroFunction":
        return self * MeroFunction.linear_inv(alpha, beta, m)

    def __truediv__(self, o):
        o = _as_mero(o)
        if o.is_zero():
            raise ZeroDivisionError("division by zero MeroFunction")
        if len(o.numer) == 1:
            inv = MeroFunction((ONE / o.numer[0],), (), _raw=True)
            out = self * inv
            return MeroFunction(pmul(list(out.numer), _prod_factors(o.denom)), out.denom)
        raise NotRepresentable("division by a non-monomial numerator")

    # evaluation -------------------------------------------------------
    def __call__(self, s) -> ExpCoeff:
        """Exact value at an exact point s (ExpCoeff-compatible)."""
        s = EC(s)
        v = peval(list(self.numer), s)
        for (a, b), m in self.denom:
            den = (a * s + b) ** m
            if den.is_zero():
                raise ZeroDivisionError(f"pole of {self} at {s}")
            v = v / den
        return v

    def _floats(self):
        if self._fl is None:
            self._fl = ([complex(c) for c in self.numer],
                        [(complex(a), complex(b), m) for (a, b), m in self.denom])
        return self._fl

    def evalf(self, s: complex) -> complex:
        num, den = self._floats()
        acc = 0j
        for c in reversed(num):
            acc = acc * s + c
        for a, b, m in den:
            acc /= (a * s + b) ** m
        return acc

    def specialize(self, s0) -> "MeroFunction":
        """Constant MeroFunction equal to self(s0)."""
        return MeroFunction.const(self(s0))

    def subs_affine(self, alpha, beta) -> "MeroFunction":
        """self(alpha*s + beta) as a MeroFunction."""
        alpha, beta = EC(alpha), EC(beta)
        lin = _ptrim([beta, alpha])
        num = []
        power = [ONE]
        for c in self.numer:
            num = padd(num, pscale(power, c))
            power = pmul(power, lin)
        den = [((a * alpha, a * beta + b), m) for (a, b), m in self.denom]
        return MeroFunction(num, den)

    # equality / text ----------------------------------------------------
    def __eq__(self, o):
        if not isinstance(o, MeroFunction):
            try:
                o = _as_mero(o)
            except (TypeError, ValueError):
                return NotImplemented
        return self.numer == o.numer and self.denom == o.denom

    def __hash__(self):
        if self._h is None:
            self._h = hash((self.numer, self.denom))
        return self._h

    def numer_str(self) -> str:
        if not self.numer:
            return "0"
        parts = []
        for k, c in enumerate(self.numer):
            if c.is_zero():
                continue
            if k == 0:
                parts.append(str(c))
                continue
            mono = "s" if k == 1 else f"s^{k}"
            if c == ONE:
                parts.append(mono)
            elif c == -ONE:
                parts.append("-" + mono)
            else:
                parts.append(f"{c}*{mono}")
        out = parts[0]
        for p in parts[1:]:
            out += p if p.startswith("-") else "+" + p
        return out

    def __str__(self):
        num = self.numer_str()
        if not self.denom:
            return num
        facs = []
        for (a, b), m in self.denom:
            f = f"({linform_str(a, b)})"
            facs.append(f if m == 1 else f"{f}^{m}")
        if len([c for c in self.numer if not c.is_zero()]) > 1:
            num = f"({num})"
        return f"{num}/({'*'.join(facs)})" if len(facs) > 1 else f"{num}/{facs[0]}"

    def __repr__(self):
        return f"MeroFunction({self})"

    def to_json(self) -> dict:
        return {"numer": [c.to_json() for c in self.numer],
                "denom": [[a.to_json(), b.to_json(), m] for (a, b), m in self.denom]}

    @staticmethod
    def from_json(obj) -> "MeroFunction":
        return MeroFunction([ExpCoeff.from_json(c) for c in obj["numer"]],
                            [((ExpCoeff.from_json(a), ExpCoeff.from_json(b)), m)
                             for a, b, m in obj["denom"]])


def _prod_factors(denom):
    out = [ONE]
    for (a, b), m in denom:
        out = pmul(out, _lin_pow(a, b, m))
    return out


def _as_mero(x) -> MeroFunction:
    if isinstance(x, MeroFunction):
        return x
    return MeroFunction.const(x)


def _unit_of(c: ExpCoeff) -> GQ:
    return c.lead()


def _normalize(numer, denom):
    numer = _ptrim(EC(c) for c in numer)
    if not numer:
        return [], []
    factors: dict = {}
    for (al, be), m in denom:
        al, be = EC(al), EC(be)
        if m == 0:
            continue
        if m < 0:
            numer = pmul(numer, _lin_pow(al, be, -m))
            continue
        if al.is_zero():
            if be.is_zero():
                raise ZeroDivisionError("zero denominator factor")
            if be.is_gauss():
                numer = pscale(numer, EC(be.gauss().inv()) ** m)
                continue
            u = _unit_of(be)
            key = (ZERO, be.scale(u.inv()))
        else:
            u = _unit_of(al)
            key = (al.scale(u.inv()), be.scale(u.inv()))
        numer = pscale(numer, EC(u.inv()) ** m)
        factors[key] = factors.get(key, 0) + m
    # cancel common linear factors
    for key in list(factors):
        al, be = key
        if al.is_zero():
            continue
        m = factors[key]
        while m > 0:
            if al == ONE:
                q, r = psynth(numer, -be)
                if not r.is_zero():
                    break
            else:
                q = pdiv_linear(numer, al, be)
                if q is None:
                    break
            numer = q
            m -= 1
        factors[key] = m
    den = sorted(((k, m) for k, m in factors.items() if m > 0),
                 key=lambda t: (t[0][0].is_zero(), t[0][0].sortkey(), t[0][1].sortkey()))
    return numer, den


# ---------------------------------------------------------------------------

def mero_arith(a: MeroFunction, b: MeroFunction, op: str) -> MeroFunction:
    if op == "add":
        return a + b
    if op == "mul":
        return a * b
    raise ValueError(f"unknown op {op!r}")


def binomial_poly(k: int, alpha=1, beta=0) -> MeroFunction:
    """binomial(alpha*s + beta, k) as a polynomial in s."""
    alpha, beta = EC(alpha), EC(beta)
    p = [ONE]
    for j in range(k):
        p = pmul(p, _ptrim([beta - j, alpha]))
    return MeroFunction(pscale(p, EC(Fraction(1, math.factorial(k)))), ())


def pole_order_and_limit(f: MeroFunction, s0):
    """(order, value) at s0.

    order > 0: pole of that order, value is the leading Laurent coefficient.
    order <= 0: value is lim f(s) as s -> s0 (zero of order -order if < 0).
    """
    s0 = EC(s0)
    den_mult = 0
    other = ONE
    lead = ONE
    for (a, b), m in f.denom:
        v = a * s0 + b
        if v.is_zero():
            den_mult += m
            lead = lead * a ** m
            continue
        if not v.is_gauss():
            # certify v != 0 before trusting the structural answer
            re, im = v.enclose(64)
            bits = 64
            while re.a <= 0 <= re.b and im.a <= 0 <= im.b:
                bits *= 2
                if bits > precision_cap():
                    raise UndecidableComparison(f"cannot separate {s0} from root of {a}*s+{b}")
                re, im = v.enclose(bits)
        other = other * v ** m
    num = list(f.numer)
    zero_mult = 0
    if num:
        while True:
            q, r = psynth(num, s0)
            if not r.is_zero():
                break
            num = q
            zero_mult += 1
    order = den_mult - zero_mult
    top = peval(num, s0)
    if order < 0:
        return order, ZERO
    try:
        return order, top / (other * lead)
    except NotRepresentable:
        return order, complex(top) / (complex(other) * complex(lead))
