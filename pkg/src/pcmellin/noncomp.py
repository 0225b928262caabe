"""Oscillatory sums y**r (log y)**nu * sum c_j y**(i sigma_j) exp(i p_j(y)).

Numerical tools for equidistribution checks, non-vanishing witnesses and the
L1 non-compensation verdict.  Verdicts that only need the envelope are exact;
the scans are deterministic for fixed ladder parameters.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid

from .scalars import EC, ExpCoeff


def _canon_poly(p) -> tuple:
    """Coefficients (p1, p2, ...) of p(y) = p1*y + p2*y**2 + ..., trailing zeros dropped."""
    p = [float(c) for c in p]
    while p and p[-1] == 0:
        p.pop()
    return tuple(p)


@dataclass
class OscillatorySum:
    terms: list                         # [(c_j, sigma_j, p_j)]
    envelope: tuple = (0, 0)            # (r, nu)
    merged: bool = field(default=False, repr=False)

    def __post_init__(self):
        if not self.merged:
            self.terms = _merge(self.terms)
            self.merged = True

    @property
    def r(self):
        return self.envelope[0]

    @property
    def nu(self) -> int:
        return int(self.envelope[1])

    def is_zero(self) -> bool:
        return not self.terms

    def phase_sum(self, y):
        """E(y) = sum c_j y**(i sigma_j) exp(i p_j(y)), without the envelope."""
        y = np.asarray(y, dtype=float)
        ly = np.log(y)
        out = np.zeros(y.shape, dtype=complex)
        for c, sig, p in self.terms:
            ph = sig * ly
            for k, a in enumerate(p, start=1):
                ph = ph + a * y ** k
            out = out + c * np.exp(1j * ph)
        return out

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        r = float(complex(EC(self.r)).real) if isinstance(self.r, (ExpCoeff, Fraction, int)) else float(self.r)
        env = y ** r
        if self.nu:
            env = env * np.log(y) ** self.nu
        return env * self.phase_sum(y)

    def split_term(self, j: int, w: float = 0.5) -> "OscillatorySum":
        """Same function with term j written as two equal-phase pieces (for merge checks)."""
        c, s, p = self.terms[j]
        raw = list(self.terms[:j]) + [(w * c, s, p), ((1 - w) * c, s, p)] + list(self.terms[j + 1:])
        return OscillatorySum(raw, self.envelope)

    def to_json(self) -> dict:
        return {"terms": [{"c": [complex(c).real, complex(c).imag], "sigma": s, "p": list(p)}
                          for c, s, p in self.terms],
                "envelope": [str(self.envelope[0]), self.nu]}


def _merge(terms, tol: float = 1e-14) -> list:
    acc: dict = {}
    order = []
    for c, sig, p in terms:
        key = (round(float(sig), 12), _canon_poly(p))
        if key not in acc:
            acc[key] = 0j
            order.append(key)
        acc[key] += complex(c)
    out = []
    for key in order:
        c = acc[key]
        if abs(c) > tol:
            out.append((c, key[0], key[1]))
    return out


# ---------------------------------------------------------------------------

def prop_phases(sigmas: Sequence[float], polys: Optional[Sequence] = None) -> list:
    """Phase functions t -> (sigma t + p(e**t)) / (2 pi) for the Weyl criterion."""
    polys = polys or [()] * len(sigmas)
    out = []
    for sig, p in zip(sigmas, polys):
        p = _canon_poly(p)

        def F(t, sig=sig, p=p):
            t = np.asarray(t, dtype=float)
            v = sig * t
            for k, a in enumerate(p, start=1):
                v = v + a * np.exp(k * t)
            return v / (2 * np.pi)
        out.append(F)
    return out


def weyl_check(F: Sequence[Callable], h: Sequence[int], T_max: float = 1e4,
               samples: int = 64, checkpoints: int = 12) -> dict:
    """Averages (1/T) int_1^T exp(2 pi i <h, F(t)>) dt at log-spaced T up to T_max.

    ``samples`` is the number of grid points per unit of t.  The report has
    the trace, the final magnitude and whether the trace decreases overall.
    """
    h = list(h)
    if not any(h):
        raise ValueError("h must be nonzero")
    if len(h) != len(F):
        raise ValueError("h and F differ in length")
    n = int(max(2, samples * (T_max - 1))) + 1
    t = np.linspace(1.0, T_max, n)
    phase = np.zeros(n)
    for hk, Fk in zip(h, F):
        if hk:
            phase = phase + hk * np.asarray(Fk(t), dtype=float)
    if np.ptp(phase) < 1e-12:
        raise ValueError("constant phase: the criterion needs a nonconstant combination")
    cum = cumulative_trapezoid(np.exp(2j * np.pi * phase), t, initial=0.0)
    Ts = np.unique(np.geomspace(2.0, T_max, checkpoints))
    trace = []
    for T in Ts:
        k = min(int(round((T - 1.0) / (t[1] - t[0]))), n - 1)
        trace.append([float(t[k]), float(abs(cum[k]) / t[k])])
    mags = [m for _, m in trace]
    return {"trace": trace, "final": mags[-1], "decreasing": mags[-1] <= mags[0],
            "ratio": mags[-1] / mags[0] if mags[0] > 0 else 0.0}


def _ladder(y_min: float, y_max: float, per_decade: int) -> np.ndarray:
    dec = max(math.log10(y_max / y_min), 1e-9)
    return np.geomspace(y_min, y_max, int(per_decade * dec) + 2)


def _check_oscillating(E: OscillatorySum):
    if not any(s != 0 or p for _, s, p in E.terms):
        raise ValueError("no term with a nonzero phase after merging")


def default_epsilon(E: OscillatorySum) -> float:
    """Heuristic target 0.1 * sum |c_j| (the existence result gives no constant)."""
    return 0.1 * sum(abs(c) for c, _, _ in E.terms)


def witness_search(E: OscillatorySum, eps: Optional[float] = None, y_max: float = 1e3,
                   y_min: float = 1.0, per_decade: int = 2000) -> dict:
    """First y on a log ladder with |E(y)| >= eps, or an exhaustion report."""
    if E.envelope[1] != 0 or float(complex(EC(E.r)).real if isinstance(E.r, ExpCoeff) else E.r) != 0:
        raise ValueError("witness search expects the envelope (0, 0)")
    _check_oscillating(E)
    eps = default_epsilon(E) if eps is None else eps
    ys = _ladder(y_min, y_max, per_decade)
    vals = np.abs(E.phase_sum(ys))
    hit = np.nonzero(vals >= eps)[0]
    if len(hit):
        k = int(hit[0])
        return {"status": "found", "witness": float(ys[k]), "abs": float(vals[k]), "eps": eps}
    k = int(np.argmax(vals))
    return {"status": "exhausted", "max_abs": float(vals[k]), "argmax": float(ys[k]), "eps": eps}


def pair_witness_search(E: OscillatorySum, delta: float, y_max: float = 1e3, y_min: float = 1.0,
                        per_decade: int = 400) -> dict:
    """(y1, y2) on a log ladder with |E(y1) - E(y2)| >= delta, or exhaustion."""
    ys = _ladder(y_min, y_max, per_decade)
    z = E.phase_sum(ys) if E.terms else np.zeros(len(ys), dtype=complex)
    best, arg = 0.0, (float(ys[0]), float(ys[0]))
    chunk = 512
    for i in range(0, len(z), chunk):
        dz = np.abs(z[i:i + chunk, None] - z[None, :])
        k = np.unravel_index(int(np.argmax(dz)), dz.shape)
        if dz[k] > best:
            best, arg = float(dz[k]), (float(ys[i + k[0]]), float(ys[k[1]]))
        if best >= delta:
            return {"status": "found", "pair": list(arg), "diff": best, "delta": delta}
    return {"status": "exhausted", "max_diff": best, "pair": list(arg), "delta": delta}


def integrability_verdict(f: OscillatorySum) -> dict:
    """integrable-on-(b,inf) / non-integrable / zero-function.

    Nonzero coefficients with r >= -1 force non-integrability; the comparison
    r < -1 is exact for rational or ExpCoeff r.
    """
    if f.is_zero():
        return {"verdict": "zero-function"}
    r = f.r
    if isinstance(r, float):
        r = Fraction(r).limit_denominator(10 ** 12) if abs(r - round(r, 12)) < 1e-15 else Fraction(r)
    rr = EC(r)
    if not rr.im_is_zero():
        raise ValueError("envelope exponent must be real")
    sign = (rr + 1).sign_re()
    verdict = "integrable-on-(b,inf)" if sign < 0 else "non-integrable"
    return {"verdict": verdict, "r": str(rr), "nu": f.nu}


def abs_partial_integrals(f: OscillatorySum, b: float, Ys: Sequence[float],
                          rel_tol: float = 1e-8) -> list:
    """int_b^Y |f(y)| dy for increasing Y (log-scale quadrature, cumulative)."""
    from .oracle import gk_adaptive
    out, acc, lo = [], 0.0, math.log(b)
    for Y in Ys:
        hi = math.log(Y)
        rep = gk_adaptive(lambda t: np.abs(f(np.exp(t))) * np.exp(t), lo, hi, rel_tol,
                          max_intervals=20000)
        acc += rep.value.real
        out.append(acc)
        lo = hi
    return out


def leading_level_sum(terms: Sequence) -> tuple:
    """Restrict (c, a + i sigma, nu) terms to the lexicographic maximum (a0, nu0)."""
    if not terms:
        return (0, 0), []
    top = max((complex(al).real, nu) for _, al, nu in terms)
    lead = [(c, complex(al).imag, ()) for c, al, nu in terms
            if abs(complex(al).real - top[0]) < 1e-12 and nu == top[1]]
    return top, lead


__all__ = ["OscillatorySum", "weyl_check", "prop_phases", "witness_search",
           "pair_witness_search", "integrability_verdict", "abs_partial_integrals",
           "default_epsilon", "leading_level_sum"]
