"""Command-line front end.

    pcmellin [options] SCRIPT        (SCRIPT may be '-' for stdin)

Exit codes: 0 success, 1 syntax or usage error, 2 unsupported pattern,
3 undecidable comparison, 4 verification mismatch.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from fractions import Fraction
from typing import Optional

import numpy as np

from .cells import Cell1D, prepare_pattern
from .errors import (MellinError, SyntaxErrorAt, UndecidableComparison, UnsupportedPattern,
                     VerificationMismatch)
from .grids import build_grid, cells_csv, enumerate_gcells, epsilon_gap
from .integrate import DEFAULT_WINDOW, asymptotic_expansion, integrate_1var, mellin
from .lang import CellDecl, Command, Env, Lowerer, Script, constant_value, parse
from .noncomp import (OscillatorySum, integrability_verdict, leading_level_sum,
                      pair_witness_search, prop_phases, weyl_check, witness_search)
from .oracle import estimate_decay, quad_function
from .scalars import EC, ExpCoeff
from .xexpr import Add, Const, Log, Mul, Pow, Var, X_ONE, X_ZERO, mul

EXIT_OK, EXIT_USAGE, EXIT_PATTERN, EXIT_UNDECIDABLE, EXIT_MISMATCH = 0, 1, 2, 3, 4


def _cplx(z) -> list:
    z = complex(z)
    return [float(z.real) + 0.0, float(z.imag) + 0.0]


def _canon(obj):
    """JSON-ready copy with complex and exact scalars in canonical form."""
    if isinstance(obj, dict):
        return {str(k): _canon(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_canon(v) for v in obj]
    if isinstance(obj, complex):
        return _cplx(obj)
    if isinstance(obj, (ExpCoeff, Fraction)):
        return str(obj)
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, float):
        return obj + 0.0 if math.isfinite(obj) else str(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(_canon(obj), sort_keys=True, indent=2)


class Session:
    """A parsed script together with its lowered cells."""

    def __init__(self, script: Script, order: int = 60, tol: float = 1e-6,
                 window=DEFAULT_WINDOW, seed: int = 0):
        self.script = script
        self.env = Env(script)
        self.order, self.tol, self.window, self.seed = order, tol, tuple(window), seed
        self.cells = {n: self._cell(d) for n, d in self.env.cell_decls.items()}

    def _cell(self, d: CellDecl) -> Cell1D:
        if len(d.ranges) < 1:
            raise SyntaxErrorAt("a cell needs a fibre range", 1, 1)
        base, fib = d.ranges[:-1], d.ranges[-1]
        box = tuple((r.var, float(complex(constant_value(r.lo, self.env.consts)).real),
                     float(complex(constant_value(r.hi, self.env.consts)).real)) for r in base)
        low = Lowerer(self.env, {r.var for r in base})

        def bound(e):
            c = low.lower(e)
            if len(c.terms) != 1 or not c.terms[0][0].is_const():
                raise UnsupportedPattern(f"cell bound depends on s: {e}", str(e))
            m, x = c.terms[0]
            from .xexpr import mul
            return mul(Const(m.const_value()), x)
        a = bound(fib.lo) if not _is_zero_ast(fib.lo) else X_ZERO
        b = None if fib.hi is None else bound(fib.hi)
        if a == X_ZERO and b is None:
            raise UnsupportedPattern("split (0, inf) into (0, c) and (c, inf)", d.name)
        return Cell1D(a, b, box, yvar=fib.var, name=d.name)

    def options(self, cmd: Command) -> dict:
        out: dict = {"s": []}
        for k, v in cmd.options:
            val = constant_value(v, self.env.consts)
            if k == "s":
                out["s"].append(val)
            else:
                out[k] = val
        return out

    def x_env(self, opts: dict, cells) -> dict:
        env = {}
        for c in cells:
            for n, lo, hi in c.box:
                env[n] = float(complex(opts[n]).real) if n in opts else (lo + hi) / 2
        return env

    def pieces(self, cmd: Command):
        by_cell: dict = {}
        raw = []
        for p in cmd.pieces:
            for cname in p.cells:
                if cname not in self.cells:
                    raise SyntaxErrorAt(f"unknown cell {cname!r}", 1, 1)
                cell = self.cells[cname]
                if cell.yvar != cmd.var:
                    raise SyntaxErrorAt(f"cell {cname} has fibre variable {cell.yvar}, "
                                        f"not {cmd.var}", 1, 1)
                coef = Lowerer(self.env, set(cell.xvars) | {cell.yvar}).lower(p.expr)
                gens = []
                for m, xe in coef.terms:
                    gens += [g.scaled(m) for g in prepare_pattern(xe, cell, self.order)]
                by_cell.setdefault(cname, (cell, []))[1].extend(gens)
                raw.append((cell, coef))
        return list(by_cell.values()), raw

    def result(self, cmd: Command):
        pieces, raw = self.pieces(cmd)
        fn = mellin if cmd.mellin else integrate_1var
        return fn(pieces, window=self.window, seed=self.seed), pieces, raw


def _is_zero_ast(e) -> bool:
    from .lang import Num
    return isinstance(e, Num) and e.value == 0


def _raw_integrand(coef, cell: Cell1D, s: complex, env: dict, shift: bool):
    def f(y):
        e = dict(env)
        e[cell.yvar] = y
        tot = 0j
        memo: dict = {}
        for m, x in coef.terms:
            tot = tot + m.evalf(s) * x.evaluate(e, s, memo)
        if shift:
            tot = tot * np.exp((s - 1) * np.log(y))
        return tot
    return f


def quad_raw(raw, s: complex, env: dict, shift: bool, rel_tol: float = 1e-10):
    """Sum over cells of the quadrature of the raw integrand."""
    tot, err = 0j, 0.0
    for cell, coef in raw:
        f = _raw_integrand(coef, cell, s, env, shift)
        a, b = cell.endpoints(env)
        if cell.unbounded:
            rep = quad_function(f, a, math.inf, rel_tol, decay=estimate_decay(f, +1))
        elif cell.at_origin:
            rep = quad_function(f, 0.0, b, rel_tol, decay0=estimate_decay(f, -1))
        else:
            rep = quad_function(f, a, b, rel_tol)
        tot += rep.value
        err += rep.abs_err_est
    return tot, err


# ---------------------------------------------------------------------------
# commands

def _terms_json(res, M=4):
    return [t.to_json(M) for t in res.H]


def cmd_prepare(sess: Session, cmd: Command) -> dict:
    pieces, _ = sess.pieces(cmd)
    out = []
    for cell, gens in pieces:
        for g in gens:
            out.append({"cell": cell.name, "G0": str(g.G0), "ell": g.ell, "eta": g.eta, "d": g.d,
                        "mu": g.mu, "class": g.klass, "series": g.phi.to_json(4)})
    return {"generators": out}


def _values(sess, cmd, res) -> list:
    opts = sess.options(cmd)
    env = sess.x_env(opts, [c for c in sess.cells.values()])
    vals = []
    for s in opts["s"]:
        v, tail = res.evaluate(complex(s), env)
        vals.append({"s": complex(s), "x": env, "value": v, "tail": tail})
    return vals


def cmd_integrate(sess: Session, cmd: Command) -> dict:
    res, _, _ = sess.result(cmd)
    out = {"H": _terms_json(res), "poles": res.poles.to_json(),
           "new_poles": res.new_poles().to_json(), "collisions": res.collisions.to_json(),
           "removable": [str(r["sigma"]) for r in res.removable(sess.window)],
           "values": _values(sess, cmd, res)}
    if res.locus is not None:
        out["locus"] = {"strips": res.locus.strips()} if res.locus.grid.vertical else {}
    return out


def cmd_poles(sess: Session, cmd: Command) -> dict:
    res, _, _ = sess.result(cmd)
    new = res.new_poles()
    return {"poles": res.poles.to_json(), "new_poles": new.to_json(),
            "generators": new.lattice_generators()}


def cmd_locus(sess: Session, cmd: Command) -> dict:
    res, _, _ = sess.result(cmd)
    return res.locus.to_json()


def cmd_grid(sess: Session, cmd: Command, csv: bool = False):
    if cmd.data:
        opts = sess.options(cmd)
        d = int(EC(opts.get("d", 1)).rational())
        data = []
        for t in cmd.data:
            if len(t.items) != 2:
                raise SyntaxErrorAt("grid data entries are (ell, eta) pairs", *t.span)
            data.append(tuple(constant_value(v, sess.env.consts) for v in t.items))
        grid = build_grid(data, d)
    else:
        res, _, _ = sess.result(cmd)
        grid = res.locus.grid
    cells = enumerate_gcells(grid, sess.window)
    if csv:
        return cells_csv(grid, cells)
    out = {"grid": grid.to_json(), "window": list(sess.window),
           "cells": [c.describe(grid) for c in cells]}
    if any(c.dim == 2 for c in cells) and grid.N:
        out["epsilon_gap"] = epsilon_gap(grid, sess.window, cells)
    if grid.vertical:
        lines = sorted({round(c.re_range(grid)[0], 12) for c in cells if c.dim == 1})
        out["lines"] = [{"re": v} for v in lines]
    return out


def cmd_asymp(sess: Session, cmd: Command) -> dict:
    pieces, _ = sess.pieces(cmd)
    opts = sess.options(cmd)
    if not opts["s"]:
        raise SyntaxErrorAt("asymp needs 'at s = ...'", 1, 1)
    s = complex(opts["s"][0])
    N = int(EC(opts.get("N", 5)).rational())
    env = sess.x_env(opts, [c for c, _ in pieces])
    gens = [g.mellin_shift() if cmd.mellin else g for c, gs in pieces if c.unbounded for g in gs]
    terms = asymptotic_expansion(gens, N, s, env)
    return {"s": s, "terms": [{"coef": str(t.coef), "exponent": t.exponent(s),
                               "exponent_exact": f"({t.ell}*s + {t.beta})/{t.d}",
                               "log_power": t.log_power, "value": t.coef.evalf(s, env)}
                              for t in terms]}


def cmd_verify(sess: Session, cmd: Command) -> dict:
    res, pieces, raw = sess.result(cmd)
    opts = sess.options(cmd)
    env = sess.x_env(opts, [c for c, _ in pieces])
    pts = []
    worst = 0.0
    for s in opts["s"] or [EC(Fraction(1, 2))]:
        s = complex(s)
        closed, tail = res.evaluate(s, env)
        quad, qerr = quad_raw(raw, s, env, cmd.mellin)
        rel = abs(closed - quad) / max(abs(quad), 1e-300)
        worst = max(worst, rel)
        pts.append({"s": s, "closed_form": closed, "quadrature": quad, "rel_err": rel,
                    "tail": tail, "quad_err": qerr})
    status = "ok" if worst <= sess.tol else "mismatch"
    out = {"max_rel_err": worst, "status": status, "points": pts, "tol": sess.tol}
    if status != "ok":
        raise VerificationMismatch(dumps(out))
    return out


def _expand(x) -> list:
    """Summands of x with products distributed over sums."""
    if isinstance(x, Add):
        return [t for a in x.terms for t in _expand(a)]
    if isinstance(x, Mul):
        out = [X_ONE]
        for f in x.factors:
            out = [mul(p, q) for p in out for q in _expand(f)]
        return out
    return [x]


def _osc_terms(coef, y: str) -> list:
    """(c, alpha, nu) for sums of c * y**alpha * log(y)**nu."""
    out = []
    for m, x0 in coef.terms:
        if not m.is_const():
            raise UnsupportedPattern("noncomp terms must not depend on s", str(m))
        for x in _expand(x0):
            out.append(_osc_monomial(complex(m.const_value()), x, y))
    return out


def _osc_monomial(c: complex, x, y: str) -> tuple:
    alpha, nu = EC(0), 0
    facs = x.factors if isinstance(x, Mul) else (x,)
    for f in facs:
        if isinstance(f, Const):
            c *= complex(f.value)
        elif isinstance(f, Var) and f.name == y:
            alpha = alpha + 1
        elif isinstance(f, Pow) and isinstance(f.base, Var) and f.base.name == y and f.sexp.is_zero():
            alpha = alpha + f.exp
        elif isinstance(f, Log) and f.arg == Var(y):
            nu += 1
        elif isinstance(f, Pow) and isinstance(f.base, Log) and f.base.arg == Var(y) and f.integral():
            nu += int(f.exp.gauss().re)
        else:
            raise UnsupportedPattern(f"unsupported factor for noncomp: {f}", f)
    return (c, alpha, nu)


def cmd_noncomp(sess: Session, cmd: Command) -> dict:
    opts = sess.options(cmd)
    coef = Lowerer(sess.env, {cmd.var}).lower(cmd.pieces[0].expr)
    terms = _osc_terms(coef, cmd.var)
    (a0, nu0), lead = leading_level_sum(terms)
    r_exact = next(al.re() for _, al, nu in terms
                   if abs(complex(al).real - a0) < 1e-12 and nu == nu0) if terms else EC(0)
    f = OscillatorySum(lead, (r_exact, nu0))
    out = {"envelope": {"r": r_exact, "nu": nu0}, "terms": f.to_json()["terms"]}
    out.update(integrability_verdict(f))
    E = OscillatorySum(lead, (0, 0))
    ymax = float(complex(opts.get("ymax", 1000)).real)
    if any(sig != 0 for _, sig, _ in E.terms):
        eps = float(complex(opts["eps"]).real) if "eps" in opts else None
        out["witness"] = witness_search(E, eps, ymax)
        sigmas = sorted({sig for _, sig, _ in E.terms if sig != 0})
        out["trace"] = weyl_check(prop_phases(sigmas), [1] * len(sigmas),
                                  float(complex(opts.get("T", 1000)).real))["trace"]
    delta = float(complex(opts.get("delta", 1)).real)
    out["pair"] = pair_witness_search(E, delta, ymax)
    return out


HANDLERS = {"prepare": cmd_prepare, "integrate": cmd_integrate, "mellin": cmd_integrate,
            "poles": cmd_poles, "locus": cmd_locus, "asymp": cmd_asymp, "verify": cmd_verify,
            "noncomp": cmd_noncomp}


def run(script: Script, order: int = 60, tol: float = 1e-6, window=DEFAULT_WINDOW,
        seed: int = 0, csv: bool = False):
    """Execute the script's command; returns a JSON-ready dict (or CSV text)."""
    sess = Session(script, order, tol, window, seed)
    cmd = script.command
    if cmd is None:
        return {"cells": {n: c.describe() for n, c in sess.cells.items()}}
    if cmd.kind == "grid":
        return cmd_grid(sess, cmd, csv)
    return HANDLERS[cmd.kind](sess, cmd)


def _window(text: str):
    parts = [float(v) for v in text.split(",")]
    if len(parts) != 4 or parts[0] >= parts[1] or parts[2] >= parts[3]:
        raise argparse.ArgumentTypeError("window is re_lo,re_hi,im_lo,im_hi")
    return tuple(parts)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pcmellin", description="Parametric Mellin transforms of "
                                "power-constructible integrands, with poles and loci.")
    p.add_argument("script", help="script file, or '-' for stdin")
    p.add_argument("--order", type=int, default=60, help="series truncation M (default 60)")
    p.add_argument("--tol", type=float, default=1e-6, help="verification tolerance")
    p.add_argument("--window", type=_window, default=DEFAULT_WINDOW,
                   help="re_lo,re_hi,im_lo,im_hi for grid enumeration")
    p.add_argument("--seed", type=int, default=0)
    fmt = p.add_mutually_exclusive_group()
    fmt.add_argument("--json", action="store_true", help="JSON output (default)")
    fmt.add_argument("--csv", action="store_true", help="CSV cell boundaries (grid command)")
    return p


def main(argv: Optional[list] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        text = sys.stdin.read() if args.script == "-" else open(args.script, encoding="utf-8").read()
    except OSError as e:
        print(dumps({"error": str(e)}), file=sys.stderr)
        return EXIT_USAGE
    try:
        out = run(parse(text), args.order, args.tol, args.window, args.seed, args.csv)
    except SyntaxErrorAt as e:
        print(dumps({"error": "syntax", "message": e.detail, "line": e.line, "col": e.col}),
              file=sys.stderr)
        return EXIT_USAGE
    except VerificationMismatch as e:
        print(str(e))
        return EXIT_MISMATCH
    except UnsupportedPattern as e:
        print(dumps({"error": "unsupported-pattern", "message": str(e),
                     "subterm": str(e.subterm)}), file=sys.stderr)
        return EXIT_PATTERN
    except UndecidableComparison as e:
        print(dumps({"error": "undecidable-comparison", "message": str(e)}), file=sys.stderr)
        return EXIT_UNDECIDABLE
    except MellinError as e:
        print(dumps({"error": type(e).__name__, "message": str(e)}), file=sys.stderr)
        return EXIT_USAGE
    sys.stdout.write(out if isinstance(out, str) else dumps(out) + "\n")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
