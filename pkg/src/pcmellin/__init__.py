"""Closed-form parametric integration and Mellin transforms of power-constructible
integrands, with pole lattices, integration loci and numerical oracles."""

from .cells import Cell1D, PreparedGenerator, prepare_pattern, pullback
from .errors import (CollisionError, DivergentLimit, FragmentEscape, MellinError,
                     NonIntegrable, NotRepresentable, UndecidableComparison, UnsupportedPattern,
                     VerificationMismatch)
from .grids import Grid, build_grid, collision_set, enumerate_gcells, epsilon_gap
from .integrate import (MellinResult, antiderivative, asymptotic_expansion, integrate_1var,
                        integrate_bounded, integrate_multi, integrate_unbounded, mellin,
                        mellin_pattern, regroup_puiseux)
from .lang import parse, pretty
from .oracle import mero_limit, quad_cell, quad_function
from .poles import Lattice, PoleSet
from .scalars import EC, ExpCoeff, MeroFunction, declare_constant
from .series import Coef, StrongSeriesT

__version__ = "0.1.0"
