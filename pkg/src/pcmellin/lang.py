"""Script mini-language: tokenizer, recursive-descent parser, pretty printer, lowering.

A script is a list of statements separated by ``;``::

    const r2 = sqrt(2);
    a(x) = 1 + x/2;  b(x) = 2 + x;
    cell A: x in (0, 1), y in (0, a(x));
    mellin y: a(x)*b(x)/(a(x)*b(x) - y) on A at s = 0.5, x = 0.5

Command statements have the form ``CMD [mellin] VAR: EXPR on CELLS [| EXPR on CELLS]
[at KEY = EXPR, ...]``; ``grid data: (ell, eta), ... at d = D`` enumerates a raw grid.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .errors import NotRepresentable, SyntaxErrorAt, UnsupportedPattern
from .scalars import EC, I_UNIT, ONE, ZERO, ExpCoeff, MeroFunction, declare_constant
from .series import Coef
from .xexpr import X_ONE, Const, XExpr, abs_, add, log_, mul, pow_, var

COMMANDS = ("prepare", "integrate", "mellin", "poles", "locus", "grid", "asymp", "verify", "noncomp")
KEYWORDS = ("const", "cell", "in", "inf", "on", "at", "data", "mellin")

_TOKEN = re.compile(r"""
    (?P<ws>[ \t\r]+) | (?P<nl>\n) | (?P<comment>\#[^\n]*)
  | (?P<num>\d+(?:\.\d+)?) | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^(),;:=|])
""", re.VERBOSE)


@dataclass(frozen=True)
class Tok:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list:
    out, pos, line, lstart = [], 0, 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise SyntaxErrorAt(f"unexpected character {text[pos]!r}", line, pos - lstart + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            lstart = m.end()
        elif kind not in ("ws", "comment"):
            out.append(Tok(kind, m.group(), line, m.start() - lstart + 1))
        pos = m.end()
    out.append(Tok("eof", "", line, pos - lstart + 1))
    return out


# ---------------------------------------------------------------------------
# AST

@dataclass(frozen=True)
class Num:
    value: Fraction
    span: tuple = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Name:
    id: str
    span: tuple = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Call:
    fn: str
    args: tuple
    span: tuple = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object
    span: tuple = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Neg:
    arg: object
    span: tuple = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class Tuple_:
    items: tuple
    span: tuple = field(default=(0, 0), compare=False)


@dataclass(frozen=True)
class ConstDecl:
    name: str
    value: object


@dataclass(frozen=True)
class FuncDef:
    name: str
    params: tuple
    body: object


@dataclass(frozen=True)
class Range:
    var: str
    lo: object
    hi: object          # None means inf


@dataclass(frozen=True)
class CellDecl:
    name: str
    ranges: tuple


@dataclass(frozen=True)
class Piece:
    expr: object
    cells: tuple


@dataclass(frozen=True)
class Command:
    kind: str
    var: str
    pieces: tuple
    options: tuple = ()     # ((key, expr), ...)
    mellin: bool = False
    data: tuple = ()        # grid data tuples


@dataclass(frozen=True)
class Script:
    statements: tuple

    @property
    def command(self) -> Optional[Command]:
        cmds = [s for s in self.statements if isinstance(s, Command)]
        return cmds[-1] if cmds else None


# ---------------------------------------------------------------------------
# parser

class Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    # helpers
    @property
    def tok(self) -> Tok:
        return self.toks[self.i]

    def peek(self, k: int = 1) -> Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, msg: str, tok: Optional[Tok] = None):
        tok = tok or self.tok
        raise SyntaxErrorAt(msg, tok.line, tok.col)

    def accept(self, text: str) -> Optional[Tok]:
        if self.tok.text == text and self.tok.kind in ("op", "name"):
            t = self.tok
            self.i += 1
            return t
        return None

    def expect(self, text: str) -> Tok:
        t = self.accept(text)
        if t is None:
            self.error(f"expected {text!r}, found {self.tok.text or 'end of input'!r}")
        return t

    def name(self) -> Tok:
        if self.tok.kind != "name":
            self.error(f"expected a name, found {self.tok.text or 'end of input'!r}")
        t = self.tok
        self.i += 1
        return t

    # grammar
    def script(self) -> Script:
        stmts = []
        while self.tok.kind != "eof":
            if self.accept(";"):
                continue
            stmts.append(self.statement())
            if self.tok.kind != "eof":
                self.expect(";")
        return Script(tuple(stmts))

    def statement(self):
        t = self.tok
        if t.kind == "name" and t.text == "const":
            self.i += 1
            n = self.name().text
            self.expect("=")
            return ConstDecl(n, self.expr())
        if t.kind == "name" and t.text == "cell":
            self.i += 1
            n = self.name().text
            self.expect(":")
            ranges = [self.range_()]
            while self.accept(","):
                ranges.append(self.range_())
            return CellDecl(n, tuple(ranges))
        if t.kind == "name" and t.text in COMMANDS and self.peek().kind == "name":
            return self.command()
        if t.kind == "name" and self.peek().text == "(":
            self.i += 1
            self.expect("(")
            params = [self.name().text]
            while self.accept(","):
                params.append(self.name().text)
            self.expect(")")
            self.expect("=")
            return FuncDef(t.text, tuple(params), self.expr())
        if t.kind == "eof":
            self.error("unexpected end of input at start of statement")
        # parse as an expression so malformed input is reported where it breaks
        self.expr()
        self.error("an expression alone is not a statement", t)

    def range_(self) -> Range:
        v = self.name().text
        self.expect("in")
        self.expect("(")
        lo = self.expr()
        self.expect(",")
        hi = None if self.accept("inf") else self.expr()
        self.expect(")")
        return Range(v, lo, hi)

    def command(self) -> Command:
        kind = self.name().text
        mel = kind == "mellin"
        if kind != "mellin" and self.tok.text == "mellin" and self.peek().kind == "name":
            self.i += 1
            mel = True
        if kind == "grid" and self.tok.text == "data":
            self.i += 1
            self.expect(":")
            data = [self.tuple_()]
            while self.accept(","):
                data.append(self.tuple_())
            return Command(kind, "", (), self.options(), False, tuple(data))
        v = self.name().text
        self.expect(":")
        pieces = [self.piece()]
        while self.accept("|"):
            pieces.append(self.piece())
        return Command(kind, v, tuple(pieces), self.options(), mel)

    def tuple_(self) -> Tuple_:
        t = self.expect("(")
        items = [self.expr()]
        while self.accept(","):
            items.append(self.expr())
        self.expect(")")
        return Tuple_(tuple(items), (t.line, t.col))

    def piece(self) -> Piece:
        e = self.expr()
        cells = []
        if self.accept("on"):
            cells.append(self.name().text)
            while self.tok.text == "," and self.peek().kind == "name" and self.peek(2).text != "=":
                self.i += 1
                cells.append(self.name().text)
        return Piece(e, tuple(cells))

    def options(self) -> tuple:
        opts = []
        if self.accept("at"):
            opts.append(self.assign())
            while self.accept(","):
                opts.append(self.assign())
        return tuple(opts)

    def assign(self):
        k = self.name().text
        self.expect("=")
        return (k, self.expr())

    def expr(self):
        left = self.term()
        while self.tok.text in ("+", "-") and self.tok.kind == "op":
            op = self.tok
            self.i += 1
            left = BinOp(op.text, left, self.term(), (op.line, op.col))
        return left

    def term(self):
        left = self.factor()
        while self.tok.text in ("*", "/") and self.tok.kind == "op":
            op = self.tok
            self.i += 1
            left = BinOp(op.text, left, self.factor(), (op.line, op.col))
        return left

    def factor(self):
        if self.tok.text == "-" and self.tok.kind == "op":
            t = self.tok
            self.i += 1
            if self.tok.kind not in ("num", "name") and self.tok.text not in ("(", "-"):
                self.error("expected an operand after '-'", t)
            return Neg(self.factor(), (t.line, t.col))
        return self.power()

    def power(self):
        base = self.atom()
        if self.tok.text == "^":
            op = self.tok
            self.i += 1
            if self.tok.kind not in ("num", "name") and self.tok.text not in ("(", "-"):
                self.error("expected an operand after '^'", op)
            return BinOp("^", base, self.factor(), (op.line, op.col))
        return base

    def atom(self):
        t = self.tok
        if t.kind == "num":
            self.i += 1
            return Num(Fraction(t.text), (t.line, t.col))
        if t.kind == "name":
            if t.text in KEYWORDS:
                self.error(f"keyword {t.text!r} cannot be used as a value")
            self.i += 1
            if self.accept("("):
                args = [self.expr()]
                while self.accept(","):
                    args.append(self.expr())
                self.expect(")")
                return Call(t.text, tuple(args), (t.line, t.col))
            return Name(t.text, (t.line, t.col))
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        self.error(f"expected an operand, found {t.text or 'end of input'!r}")


def parse(text: str) -> Script:
    return Parser(text).script()


def parse_expr(text: str):
    p = Parser(text)
    e = p.expr()
    if p.tok.kind != "eof":
        p.error(f"unexpected {p.tok.text!r}")
    return e


# ---------------------------------------------------------------------------
# pretty printer

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}


def _num_str(v: Fraction) -> str:
    if v.denominator == 1:
        return str(v.numerator)
    d, twos, fives = v.denominator, 0, 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d != 1:
        return f"({v.numerator}/{v.denominator})"
    k = max(twos, fives)
    scaled = v * 10 ** k
    s = str(scaled.numerator).rjust(k + 1, "0")
    return f"{s[:-k]}.{s[-k:]}"


def _prec(e) -> int:
    if isinstance(e, BinOp):
        return 4 if e.op == "^" else _PREC[e.op]
    if isinstance(e, Neg):
        return 3
    return 5


def pretty(e) -> str:
    if isinstance(e, Num):
        return _num_str(e.value)
    if isinstance(e, Name):
        return e.id
    if isinstance(e, Call):
        return f"{e.fn}({', '.join(pretty(a) for a in e.args)})"
    if isinstance(e, Tuple_):
        return f"({', '.join(pretty(a) for a in e.items)})"
    if isinstance(e, Neg):
        inner = pretty(e.arg)
        return f"-{inner}" if _prec(e.arg) >= 3 else f"-({inner})"
    if isinstance(e, BinOp):
        if e.op == "^":
            l = pretty(e.left)
            l = l if _prec(e.left) == 5 else f"({l})"
            r = pretty(e.right)
            r = r if _prec(e.right) >= 3 else f"({r})"
            return f"{l}^{r}"
        p = _PREC[e.op]
        l = pretty(e.left)
        l = l if _prec(e.left) >= p else f"({l})"
        r = pretty(e.right)
        r = r if _prec(e.right) > p else f"({r})"
        return f"{l} {e.op} {r}"
    if isinstance(e, Script):
        return ";\n".join(pretty(s) for s in e.statements) + ";\n"
    if isinstance(e, ConstDecl):
        return f"const {e.name} = {pretty(e.value)}"
    if isinstance(e, FuncDef):
        return f"{e.name}({', '.join(e.params)}) = {pretty(e.body)}"
    if isinstance(e, CellDecl):
        rs = ", ".join(f"{r.var} in ({pretty(r.lo)}, {'inf' if r.hi is None else pretty(r.hi)})"
                       for r in e.ranges)
        return f"cell {e.name}: {rs}"
    if isinstance(e, Command):
        head = e.kind + (" mellin" if e.mellin and e.kind != "mellin" else "")
        if e.data:
            body = f"{head} data: " + ", ".join(pretty(t) for t in e.data)
        else:
            ps = " | ".join(pretty(p.expr) + (f" on {', '.join(p.cells)}" if p.cells else "")
                            for p in e.pieces)
            body = f"{head} {e.var}: {ps}"
        if e.options:
            body += " at " + ", ".join(f"{k} = {pretty(v)}" for k, v in e.options)
        return body
    raise TypeError(f"cannot print {e!r}")


# ---------------------------------------------------------------------------
# lowering

class Env:
    """Declarations collected from a script."""

    def __init__(self, script: Script):
        self.consts: dict = {}
        self.funcs: dict = {}
        self.cells: dict = {}
        for st in script.statements:
            if isinstance(st, ConstDecl):
                self.consts[st.name] = _declare(st)
            elif isinstance(st, FuncDef):
                self.funcs[st.name] = st
        self.cell_decls = {st.name: st for st in script.statements if isinstance(st, CellDecl)}

    def expand(self, e, bound=None, depth: int = 0):
        """Inline user functions."""
        if depth > 50:
            raise SyntaxErrorAt("function definitions are recursive", *_span(e))
        if isinstance(e, Call) and e.fn in self.funcs:
            f = self.funcs[e.fn]
            if len(f.params) != len(e.args):
                raise SyntaxErrorAt(f"{e.fn} takes {len(f.params)} argument(s), got {len(e.args)}",
                                    *_span(e))
            sub = {p: self.expand(a, bound, depth) for p, a in zip(f.params, e.args)}
            return self.expand(_substitute(f.body, sub), bound, depth + 1)
        if isinstance(e, Call):
            return Call(e.fn, tuple(self.expand(a, bound, depth) for a in e.args), e.span)
        if isinstance(e, BinOp):
            return BinOp(e.op, self.expand(e.left, bound, depth), self.expand(e.right, bound, depth),
                         e.span)
        if isinstance(e, Neg):
            return Neg(self.expand(e.arg, bound, depth), e.span)
        return e


def _span(e):
    sp = getattr(e, "span", (1, 1))
    return sp if sp != (0, 0) else (1, 1)


def _substitute(e, sub: dict):
    if isinstance(e, Name) and e.id in sub:
        return sub[e.id]
    if isinstance(e, Call):
        return Call(e.fn, tuple(_substitute(a, sub) for a in e.args), e.span)
    if isinstance(e, BinOp):
        return BinOp(e.op, _substitute(e.left, sub), _substitute(e.right, sub), e.span)
    if isinstance(e, Neg):
        return Neg(_substitute(e.arg, sub), e.span)
    return e


def _declare(st: ConstDecl) -> ExpCoeff:
    v = st.value
    if isinstance(v, Call) and v.fn in ("sqrt", "log", "exp") and len(v.args) == 1:
        arg = constant_value(v.args[0], {})
        if not arg.is_rational():
            raise SyntaxErrorAt(f"{v.fn} of a non-rational value", *_span(v))
        return declare_constant(st.name, v.fn, arg.rational())
    return constant_value(v, {})


def constant_value(e, consts: dict) -> ExpCoeff:
    """Exact value of an s- and x-free expression."""
    if isinstance(e, Num):
        return EC(e.value)
    if isinstance(e, Name):
        if e.id in consts:
            return consts[e.id]
        if e.id == "i":
            return I_UNIT
        raise SyntaxErrorAt(f"unknown identifier {e.id!r}", *_span(e))
    if isinstance(e, Neg):
        return -constant_value(e.arg, consts)
    if isinstance(e, BinOp):
        l = constant_value(e.left, consts)
        r = constant_value(e.right, consts)
        if e.op == "+":
            return l + r
        if e.op == "-":
            return l - r
        if e.op == "*":
            return l * r
        if e.op == "/":
            return l / r
        if e.op == "^" and r.is_rational() and r.rational().denominator == 1:
            k = int(r.rational())
            return l ** k if k >= 0 else ONE / (l ** -k)
    raise SyntaxErrorAt(f"not a constant expression: {pretty(e)}", *_span(e))


def affine_in_s(e, consts: dict) -> tuple:
    """(alpha, beta) with e = alpha*s + beta, all constants exact."""
    if isinstance(e, Name) and e.id == "s":
        return ONE, ZERO
    if isinstance(e, Neg):
        a, b = affine_in_s(e.arg, consts)
        return -a, -b
    if isinstance(e, BinOp) and e.op in "+-*/":
        la, lb = affine_in_s(e.left, consts)
        ra, rb = affine_in_s(e.right, consts)
        if e.op == "+":
            return la + ra, lb + rb
        if e.op == "-":
            return la - ra, lb - rb
        if e.op == "*":
            if la.is_zero():
                return ra * lb, rb * lb
            if ra.is_zero():
                return la * rb, lb * rb
            raise UnsupportedPattern(f"exponent is not affine in s: {pretty(e)}", pretty(e))
        if not ra.is_zero():
            raise UnsupportedPattern(f"exponent is not affine in s: {pretty(e)}", pretty(e))
        return la / rb, lb / rb
    return ZERO, constant_value(e, consts)


def _mero_inverse(m: MeroFunction) -> MeroFunction:
    poly = MeroFunction.const(1)
    for a, b, k in m.pole_factors():
        for _ in range(k):
            poly = poly * MeroFunction.poly([b, a])
    if m.degree() == 0:
        return poly * MeroFunction.const(ONE / m.numer[0])
    if m.degree() == 1:
        return poly * MeroFunction.linear_inv(m.numer[1], m.numer[0])
    raise UnsupportedPattern(f"cannot divide by {m}", str(m))


def _as_xexpr(c: Coef, what) -> XExpr:
    parts = []
    for m, x in c.terms:
        if not m.is_const():
            raise UnsupportedPattern(f"s-dependent factor inside a function of y: {pretty(what)}",
                                     pretty(what))
        parts.append(mul(Const(m.const_value()), x))
    return add(*parts) if parts else Const(ZERO)


def _norm(c: Coef) -> Coef:
    """Collapse the constant-coefficient terms of c into one XExpr sum."""
    const_part, rest = [], []
    for m, x in c.terms:
        if m.is_const():
            const_part.append(mul(Const(m.const_value()), x))
        else:
            rest.append((m, x))
    if len(const_part) <= 1 and not rest:
        return c
    out = list(rest)
    if const_part:
        out.append((MeroFunction.const(1), add(*const_part)))
    return Coef(out)


class Lowerer:
    """AST -> Coef (sum of MeroFunction(s) * XExpr(x, y))."""

    def __init__(self, env: Env, variables: set):
        self.env = env
        self.vars = set(variables)

    def lower(self, e) -> Coef:
        e = self.env.expand(e)
        return self._lower(e)

    def _lower(self, e) -> Coef:
        return _norm(self._lower_raw(e))

    def _lower_raw(self, e) -> Coef:
        if isinstance(e, Num):
            return Coef.of(MeroFunction.const(EC(e.value)))
        if isinstance(e, Name):
            if e.id == "s":
                return Coef.of(MeroFunction.s())
            if e.id in self.vars:
                return Coef.of(1, var(e.id))
            if e.id in self.env.consts:
                return Coef.of(MeroFunction.const(self.env.consts[e.id]))
            if e.id == "i":
                return Coef.of(MeroFunction.const(I_UNIT))
            raise SyntaxErrorAt(f"unknown identifier {e.id!r}", *_span(e))
        if isinstance(e, Neg):
            return -self._lower(e.arg)
        if isinstance(e, Call):
            if len(e.args) != 1:
                raise SyntaxErrorAt(f"{e.fn} takes one argument", *_span(e))
            arg = _as_xexpr(self._lower(e.args[0]), e)
            if e.fn == "log":
                return Coef.of(1, log_(arg))
            if e.fn == "abs":
                return Coef.of(1, abs_(arg))
            if e.fn == "sqrt":
                return Coef.of(1, pow_(arg, EC(Fraction(1, 2))))
            raise SyntaxErrorAt(f"unknown function {e.fn!r}", *_span(e))
        if isinstance(e, BinOp):
            if e.op == "^":
                return self._power(e)
            l = self._lower(e.left)
            if e.op == "+":
                return l + self._lower(e.right)
            if e.op == "-":
                return l - self._lower(e.right)
            r = self._lower(e.right)
            if e.op == "*":
                return l * r
            return l * self._inverse(r, e)
        raise SyntaxErrorAt(f"cannot lower {e!r}", *_span(e))

    def _inverse(self, r: Coef, e) -> Coef:
        if len(r.terms) == 1:
            m, x = r.terms[0]
            try:
                mi = _mero_inverse(m)
            except (NotRepresentable, ZeroDivisionError) as exc:
                raise UnsupportedPattern(f"cannot divide by {pretty(e.right)}", pretty(e.right)) from exc
            return Coef.of(mi, pow_(x, -1))
        return Coef.of(1, pow_(_as_xexpr(r, e.right), -1))

    def _power(self, e) -> Coef:
        alpha, beta = affine_in_s(e.right, self.env.consts)
        base = self._lower(e.left)
        if len(base.terms) == 1 and not base.terms[0][0].is_const():
            m, x = base.terms[0]
            if alpha.is_zero() and beta.is_rational() and beta.rational().denominator == 1:
                k = int(beta.rational())
                mm = MeroFunction.const(1)
                for _ in range(abs(k)):
                    mm = mm * m
                if k < 0:
                    mm = _mero_inverse(mm)
                return Coef.of(mm, pow_(x, beta))
            raise UnsupportedPattern(f"non-integer power of an s-dependent factor: {pretty(e)}",
                                     pretty(e))
        return Coef.of(1, pow_(_as_xexpr(base, e.left), beta, alpha))


__all__ = ["parse", "parse_expr", "pretty", "tokenize", "Script", "Command", "CellDecl",
           "ConstDecl", "FuncDef", "Range", "Piece", "Num", "Name", "Call", "BinOp", "Neg",
           "Env", "Lowerer", "affine_in_s", "constant_value", "COMMANDS"]
