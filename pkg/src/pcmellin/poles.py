"""Pole sets: finitely many points plus finitely many Z- or N-indexed lattices.

A lattice ``(ell, beta, index, kind)`` stands for ``{s : ell*s + beta in index}``
when ``kind == "points"`` and ``{s : Re(ell*s + beta) in index}`` when
``kind == "lines"``.  Points are stored as linear forms ``alpha*s + beta`` so a
root never has to be divided out.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field

from .errors import NotRepresentable, UndecidableComparison
from .scalars import EC, ONE, ZERO, ExpCoeff, I_UNIT, linform_str

_NUM_TOL = 1e-9


def _is_exact(s) -> bool:
    return isinstance(s, ExpCoeff) or isinstance(s, int)


def _in_index(t: ExpCoeff, index: str, real_only: bool) -> bool:
    if real_only:
        if not t.re_is_integer():
            return False
    elif not t.is_integer():
        return False
    if index == "N":
        return t.sign_re() >= 0
    return True


def _near_index(t: complex, index: str, real_only: bool, tol: float) -> bool:
    r = t.real
    if abs(r - round(r)) > tol:
        return False
    if not real_only and abs(t.imag) > tol:
        return False
    return index == "Z" or round(r) >= 0


@dataclass(frozen=True)
class Lattice:
    ell: ExpCoeff
    beta: ExpCoeff
    index: str = "Z"      # "Z" or "N"
    kind: str = "points"  # "points" or "lines"

    def __post_init__(self):
        if self.ell.is_zero():
            raise ValueError("lattice needs ell != 0")
        if self.index not in ("Z", "N") or self.kind not in ("points", "lines"):
            raise ValueError("bad lattice tags")

    def contains(self, s, tol: float = _NUM_TOL) -> bool:
        if _is_exact(s):
            t = self.ell * EC(s) + self.beta
            try:
                return _in_index(t, self.index, self.kind == "lines")
            except UndecidableComparison:
                raise
        t = complex(self.ell) * complex(s) + complex(self.beta)
        # tolerance scaled by |ell| so it is a distance in the s-plane
        return _near_index(t, self.index, self.kind == "lines", tol * max(1.0, abs(complex(self.ell))))

    def member(self, nu: int, t: float = 0.0):
        """The lattice element with index nu (and offset t along a line)."""
        if self.index == "N" and nu < 0:
            raise ValueError("N-lattice index must be >= 0")
        if self.kind == "points":
            try:
                return (EC(nu) - self.beta) / self.ell
            except NotRepresentable:
                return (nu - complex(self.beta)) / complex(self.ell)
        return (nu + 1j * t - complex(self.beta)) / complex(self.ell)

    def generators(self) -> dict:
        """Offset and Z-generator (and line direction for line families)."""
        ell = complex(self.ell)
        out = {"offset": -complex(self.beta) / ell, "step": 1 / ell}
        try:
            out["offset_exact"] = str(-self.beta / self.ell)
            out["step_exact"] = str(ONE / self.ell)
        except NotRepresentable:
            pass
        if self.kind == "lines":
            out["direction"] = 1j / ell
        return out

    def random_members(self, n: int, rng: random.Random, span: int = 50):
        out = []
        for _ in range(n):
            nu = rng.randint(0 if self.index == "N" else -span, span)
            t = rng.uniform(-10, 10) if self.kind == "lines" else 0.0
            out.append(self.member(nu, t))
        return out

    def describe(self) -> str:
        rng = "N" if self.index == "N" else "Z"
        lhs = linform_str(self.ell, self.beta)
        return f"Re({lhs}) in {rng}" if self.kind == "lines" else f"{lhs} in {rng}"

    def to_json(self) -> dict:
        g = self.generators()
        return {"ell": str(self.ell), "beta": str(self.beta), "index": self.index,
                "kind": self.kind, "set": self.describe(),
                "offset": [g["offset"].real + 0.0, g["offset"].imag + 0.0],
                "step": [g["step"].real + 0.0, g["step"].imag + 0.0]}


@dataclass(frozen=True)
class PoleSet:
    points: tuple = ()      # tuple of (alpha, beta): root of alpha*s + beta
    lattices: tuple = ()    # tuple of Lattice

    @staticmethod
    def empty() -> "PoleSet":
        return PoleSet()

    @staticmethod
    def point(s0) -> "PoleSet":
        return PoleSet(points=((ONE, -EC(s0)),))

    @staticmethod
    def from_factors(factors) -> "PoleSet":
        pts = {(EC(a), EC(b)) for a, b in factors if not EC(a).is_zero()}
        return PoleSet(points=tuple(sorted(pts, key=lambda p: (p[0].sortkey(), p[1].sortkey()))))

    def is_empty(self) -> bool:
        return not self.points and not self.lattices

    def union(self, *others) -> "PoleSet":
        pts = list(self.points)
        lat = list(self.lattices)
        for o in others:
            for p in o.points:
                if p not in pts:
                    pts.append(p)
            for l in o.lattices:
                if l not in lat:
                    lat.append(l)
        pts.sort(key=lambda p: (p[0].sortkey(), p[1].sortkey()))
        return PoleSet(tuple(pts), tuple(lat))

    __or__ = union

    def point_lattices(self):
        return [l for l in self.lattices if l.kind == "points"]

    def line_families(self):
        return [l for l in self.lattices if l.kind == "lines"]

    def contains_point(self, s, tol: float = _NUM_TOL) -> bool:
        for a, b in self.points:
            if _is_exact(s):
                if (a * EC(s) + b).is_zero():
                    return True
            elif abs(complex(a) * complex(s) + complex(b)) <= tol * max(1.0, abs(complex(a))):
                return True
        return False

    def contains(self, s, tol: float = _NUM_TOL) -> bool:
        if self.contains_point(s, tol):
            return True
        return any(l.contains(s, tol) for l in self.lattices)

    __contains__ = contains

    def distance_hint(self, s: complex) -> float:
        """Distance from s to the nearest listed point or lattice point (numeric)."""
        best = float("inf")
        for a, b in self.points:
            best = min(best, abs(s + complex(b) / complex(a)))
        for l in self.lattices:
            t = complex(l.ell) * s + complex(l.beta)
            if l.kind == "points":
                nu = round(t.real)
                if l.index == "N":
                    nu = max(nu, 0)
                best = min(best, abs(t - nu) / abs(complex(l.ell)))
            else:
                nu = round(t.real)
                if l.index == "N":
                    nu = max(nu, 0)
                best = min(best, abs(t.real - nu) / abs(complex(l.ell)))
        return best

    def lattice_generators(self) -> list:
        return [dict(l.generators(), set=l.describe()) for l in self.lattices]

    def to_json(self) -> dict:
        pts = []
        for a, b in self.points:
            try:
                pts.append(str(-b / a))
            except NotRepresentable:
                pts.append(f"root({linform_str(a, b)})")
        return {"points": pts, "lattices": [l.to_json() for l in self.lattices]}


def poles_of_meros(meros) -> PoleSet:
    facs = set()
    for m in meros:
        for a, b, _ in m.pole_factors():
            facs.add((a, b))
    return PoleSet.from_factors(facs)


__all__ = ["Lattice", "PoleSet", "poles_of_meros", "I_UNIT", "ZERO"]
