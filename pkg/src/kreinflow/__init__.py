"""Invariants of J-unitary operators on finite-dimensional Krein spaces."""

from .errors import (AmbiguousSplitError, DegenerateError, GapError, InputError, KreinError,
                     NotJUnitaryError, NumericalError, PathResolutionError,
                     TransversalityError)
from .junitary import JUnitaryOperator, signature, spectral_split, validate
from .krein_core import FundamentalSymmetry, standard_g, standard_j, standard_symmetries
from .numerics import DEFAULT_TOL, Tolerances
from .specflow import FlowReport, UnitaryPath, signature_via_flow, spectral_flow

__version__ = "0.1.0"
