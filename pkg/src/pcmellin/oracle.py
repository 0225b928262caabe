"""Independent numerical checks: adaptive Gauss-Kronrod quadrature and limits.

The quadrature works on complex integrands with one shared subdivision; the
error of an interval is |K15 - G7| measured on the complex value.  Infinite
ranges (and ranges reaching y = 0) are mapped to log scale and cut at a point
where an explicit incomplete-gamma tail bound is small enough.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable, Mapping, Optional, Sequence

import numpy as np
from scipy.special import gammaincc, gamma as gamma_fn

from .cells import PreparedGenerator
from .errors import DivergentLimit, NonIntegrable

# QUADPACK qk15 abscissae and weights (Kronrod 15 points, embedded Gauss 7).
_XGK = np.array([0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                 0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                 0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                 0.207784955007898467600689403773245, 0.0])
_WGK = np.array([0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                 0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                 0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                 0.204432940075298892414161999234649, 0.209482141084727828012999174891714])
_WG = np.array([0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                0.381830050505118944950369775488975, 0.417959183673469387755102040816327])
_NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])           # 15 nodes, ascending
_WK = np.concatenate([_WGK[:-1], _WGK[::-1]])
_WG15 = np.zeros(15)
_WG15[[1, 3, 5, 7, 9, 11, 13]] = np.concatenate([_WG[:-1], _WG[::-1]])


@dataclass
class QuadReport:
    value: complex
    abs_err_est: float
    evaluations: int
    tail_bound: float = 0.0
    quad_err: float = 0.0
    series_tail: float = 0.0

    def to_json(self) -> dict:
        return {"value": [self.value.real, self.value.imag], "abs_err_est": self.abs_err_est,
                "evaluations": self.evaluations, "tail_bound": self.tail_bound,
                "quad_err": self.quad_err, "series_tail": self.series_tail}


def _gk(f, a: float, b: float):
    c, h = (a + b) / 2, (b - a) / 2
    v = np.asarray(f(c + h * _NODES), dtype=complex)
    k = h * np.dot(_WK, v)
    g = h * np.dot(_WG15, v)
    return k, abs(k - g)


def gk_adaptive(f: Callable, a: float, b: float, rel_tol: float = 1e-10, abs_tol: float = 1e-14,
                max_intervals: int = 4000) -> QuadReport:
    """Globally adaptive GK 7-15 on [a, b] for a vectorised complex integrand."""
    k, e = _gk(f, a, b)
    heap = [(-e, a, b, k, e)]
    total, err, nev = k, e, 15
    while err > max(abs_tol, rel_tol * abs(total)) and len(heap) < max_intervals:
        _, lo, hi, k0, e0 = heapq.heappop(heap)
        mid = (lo + hi) / 2
        k1, e1 = _gk(f, lo, mid)
        k2, e2 = _gk(f, mid, hi)
        nev += 30
        total += k1 + k2 - k0
        err += e1 + e2 - e0
        heapq.heappush(heap, (-e1, lo, mid, k1, e1))
        heapq.heappush(heap, (-e2, mid, hi, k2, e2))
    # re-sum to avoid drift from incremental updates
    total = sum(item[3] for item in heap)
    err = sum(item[4] for item in heap)
    return QuadReport(complex(total), float(err), nev, 0.0, float(err))


def _upper_gamma(a: float, z: float) -> float:
    return float(gammaincc(a, z) * gamma_fn(a))


def power_log_tail(p: float, mu: int, L: float) -> float:
    """int_L^inf t**mu * exp(-p*t) dt for p > 0, L >= 0."""
    if p <= 0:
        return math.inf
    return _upper_gamma(mu + 1, p * L) / p ** (mu + 1)


def _logspace_integrand(f):
    def g(t):
        y = np.exp(t)
        return np.asarray(f(y), dtype=complex) * y
    return g


def quad_function(f: Callable, lo: float, hi: float, rel_tol: float = 1e-10,
                  decay: Optional[tuple] = None, decay0: Optional[tuple] = None,
                  max_intervals: int = 4000) -> QuadReport:
    """Integral of a raw vectorised integrand f(y) over (lo, hi).

    ``hi = inf`` needs ``decay = (p, mu)`` with |f(y)| <~ C y**p (log y)**mu, p < -1;
    ``lo = 0`` needs ``decay0 = (p, mu)`` with |f(y)| <~ C y**p |log y|**mu near 0, p > -1.
    C is estimated from samples near the cut and inflated by a safety factor.
    """
    tail = 0.0
    t_lo, t_hi = None, None
    if math.isinf(hi):
        if decay is None:
            raise ValueError("an infinite range needs a decay exponent")
        p, mu = decay
        if p >= -1:
            raise NonIntegrable(f"decay exponent {p} >= -1 at infinity")
        t_hi, tail_hi = _choose_cut(f, p, mu, max(lo, 1.0), rel_tol, +1)
        tail += tail_hi
    if lo == 0:
        if decay0 is None:
            raise ValueError("a range reaching 0 needs a decay exponent at 0")
        p, mu = decay0
        if p <= -1:
            raise NonIntegrable(f"exponent {p} <= -1 at the origin")
        t_lo, tail_lo = _choose_cut(f, p, mu, min(hi, 1.0) if math.isfinite(hi) else 1.0, rel_tol, -1)
        tail += tail_lo
    if t_lo is None and t_hi is None:
        rep = gk_adaptive(f, lo, hi, rel_tol, max_intervals=max_intervals)
        return rep
    g = _logspace_integrand(f)
    a = t_lo if t_lo is not None else math.log(lo)
    b = t_hi if t_hi is not None else math.log(hi)
    rep = gk_adaptive(g, a, b, rel_tol, max_intervals=max_intervals)
    rep.tail_bound = tail
    rep.abs_err_est = rep.quad_err + tail
    return rep


def _choose_cut(f, p: float, mu: int, start: float, rel_tol: float, side: int):
    """Cut point t (log scale) with an explicit tail bound; side=+1 at infinity, -1 at 0."""
    t0 = math.log(start) if start > 0 else 0.0
    t = t0 + side * 2.0
    g = _logspace_integrand(f)
    rough = gk_adaptive(g, min(t0, t), max(t0, t), 1e-6, max_intervals=50).value
    scale = max(abs(rough), 1e-300)
    for _ in range(200):
        ts = t + side * np.linspace(0.0, 1.0, 9)
        ys = np.exp(ts)
        vals = np.abs(np.asarray(f(ys), dtype=complex))
        lg = np.maximum(np.abs(ts), 1e-300)
        C = 4.0 * float(np.max(vals / (ys ** p * lg ** mu)))
        q = -(p + 1) if side > 0 else p + 1
        tb = C * power_log_tail(q, mu, abs(t))
        if tb <= rel_tol / 10 * scale or tb == 0.0:
            return t, tb
        t += side * 2.0
    return t, tb


def estimate_decay(f: Callable, side: int, slack: float = 0.05, points=(1e6, 1e8)) -> tuple:
    """Empirical exponent p with |f(y)| ~ y**p, from a log-log slope.

    side=+1 looks at infinity, side=-1 near 0.  The slope is moved by ``slack``
    toward slower decay so the derived tail bound stays conservative.
    """
    y1, y2 = points if side > 0 else (1 / points[0], 1 / points[1])
    ys = np.geomspace(y1, y2, 9)
    v = np.abs(np.asarray(f(ys), dtype=complex))
    v = np.maximum(v, 1e-300)
    slope = float(np.polyfit(np.log(ys), np.log(v), 1)[0])
    return (slope + slack, 0) if side > 0 else (slope - slack, 0)


def _series_tail_at(T: PreparedGenerator, s: complex, env: Mapping, y) -> float:
    e = dict(env)
    e[T.cell.yvar] = y
    _, tail = T.phi.evaluate(s, e)
    return float(np.max(tail))


def quad_cell(T, s: complex, env: Mapping, rel_tol: float = 1e-10) -> QuadReport:
    """Integral over the fibre of the cell of one generator (or a list on one cell)."""
    gens = list(T) if isinstance(T, (list, tuple)) else [T]
    cell = gens[0].cell
    s = complex(s)

    def f(y):
        out = 0j
        for g in gens:
            out = out + g.evaluate(s, env, y)
        return out

    a, b = cell.endpoints(env)
    if cell.unbounded:
        p, mu = _unbounded_decay(gens, s, env)
        rep = quad_function(f, a, math.inf, rel_tol, decay=(p, mu))
    elif cell.at_origin:
        p, mu = _origin_decay(gens, s, env)
        rep = quad_function(f, 0.0, b, rel_tol, decay0=(p, mu))
    else:
        rep = gk_adaptive(f, a, b, rel_tol)
    st = max(_series_tail_at(g, s, env, np.array([a if a > 0 else b, b if math.isfinite(b) else a]))
             for g in gens)
    width = (b - a) if math.isfinite(b) else 1.0
    rep.series_tail = st * width
    rep.abs_err_est = rep.quad_err + rep.tail_bound + rep.series_tail
    return rep


def _unbounded_decay(gens, s, env):
    best = None
    for g in gens:
        lam = (complex(g.ell) * s + complex(g.eta)) / g.d
        kmin = None
        for (k,), c in g.phi.items():
            if abs(c.evalf(s, env)) > 0:
                kmin = k
                break
        if kmin is None:
            continue
        p = lam.real - kmin / g.d
        cand = (p, g.mu)
        best = cand if best is None or cand > best else best
    if best is None:
        return (-2.0, 0)
    if best[0] >= -1:
        raise NonIntegrable(f"leading exponent {best[0]} fails the decay test at infinity")
    return best


def _origin_decay(gens, s, env):
    worst = None
    for g in gens:
        lam = (complex(g.ell) * s + complex(g.eta)) / g.d
        nmin = None
        for (m, n), c in g.phi.items():
            if m == 0 and abs(c.evalf(s, env)) > 0:
                nmin = n if nmin is None else min(nmin, n)
        if nmin is None:
            continue
        cand = (lam.real + nmin / g.d, g.mu)
        worst = cand if worst is None or cand[0] < worst[0] else worst
    if worst is None:
        return (0.0, 0)
    if worst[0] <= -1:
        raise NonIntegrable(f"leading exponent {worst[0]} fails the integrability test at 0")
    return worst


@dataclass
class LimitReport:
    value: complex
    err: float
    residues: list

    def to_json(self) -> dict:
        return {"value": [self.value.real, self.value.imag], "err": self.err}


def mero_limit(H: Callable, sigma: complex, radii: Sequence[float] = (1e-2, 5e-3, 2.5e-3),
               n: int = 64, div_tol: float = 1e-6) -> LimitReport:
    """lim_{s -> sigma} H(s) via circle means; raises DivergentLimit at a genuine pole.

    The mean over a circle returns the constant Laurent coefficient; the
    coefficients of (s-sigma)**-1 and **-2 are read off the same samples.
    """
    sigma = complex(sigma)
    th = 2 * np.pi * (np.arange(n) + 0.5) / n
    est, res = [], []
    for r in radii:
        z = r * np.exp(1j * th)
        vals = np.array([complex(H(sigma + zk)) for zk in z])
        c0 = vals.mean()
        cm1 = r * (vals * np.exp(1j * th)).mean()
        cm2 = r * r * (vals * np.exp(2j * th)).mean()
        est.append(c0)
        res.append((cm1, cm2))
    scale = max(1.0, abs(est[-1]))
    cm1, cm2 = res[-1]
    if abs(cm1) > div_tol * scale or abs(cm2) > div_tol * scale:
        raise DivergentLimit(f"principal part detected at {sigma}: c-1={cm1:.3g}, c-2={cm2:.3g}",
                             [cm1, cm2])
    if len(est) >= 2:
        r1, r2 = radii[-2], radii[-1]
        w = (r1 / r2) ** 2
        val = (w * est[-1] - est[-2]) / (w - 1)
        var = max(abs(p - q) for p, q in zip(est, est[1:]))
    else:
        val, var = est[-1], 0.0
    return LimitReport(complex(val), float(var + abs(val - est[-1])), [r[0] for r in res])


__all__ = ["QuadReport", "gk_adaptive", "quad_function", "quad_cell", "mero_limit",
           "LimitReport", "power_log_tail", "estimate_decay"]
