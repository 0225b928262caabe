"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes, so keep the classes stable.
"""


class MellinError(Exception):
    """Base class for engine errors."""


class UndecidableComparison(MellinError):
    """Interval refinement hit the precision cap without separating two values."""


class NotRepresentable(MellinError):
    """An exact operation left the representable scalar fragment."""


class UnsupportedPattern(MellinError):
    """Input does not match any supported preparation pattern."""

    def __init__(self, msg, subterm=None):
        super().__init__(msg)
        self.subterm = subterm


class PatternMismatch(UnsupportedPattern):
    pass


class FragmentEscape(UnsupportedPattern):
    pass


class UnitCertificationError(MellinError):
    pass


class BoundednessError(MellinError):
    pass


class PoleProximity(MellinError):
    pass


class CollisionError(MellinError):
    pass


class DomainError(MellinError, ValueError):
    """Evaluation outside the declared positivity domain."""


class NonIntegrable(MellinError):
    pass


class VerificationMismatch(MellinError):
    pass


class DivergentLimit(MellinError):
    """A numerical limit found a nonzero principal part (a genuine pole)."""

    def __init__(self, msg, residues=None):
        super().__init__(msg)
        self.residues = residues or []


class SyntaxErrorAt(MellinError):
    """Parse error carrying a 1-based line/column position."""

    def __init__(self, msg, line: int, col: int):
        super().__init__(f"{line}:{col}: {msg}")
        self.line = line
        self.col = col
        self.detail = msg
