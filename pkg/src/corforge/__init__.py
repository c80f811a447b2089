"""Factorized Dyson maps, composite Coriolis terms and picture-ladder evolution."""

from ._core import BACKEND
from .errors import CorforgeError
from .evolution import Ensemble, EvolutionResult, TimeGrid
from .linop import GeneralFactor, SeparableFactor, build_osc_operators
from .pictures import FactorizedDysonMap, StatePair, picture_family
from .weyl import P, SymbolicFactor, WeylPolynomial, X, normal_order

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CorforgeError",
    "Ensemble",
    "EvolutionResult",
    "FactorizedDysonMap",
    "GeneralFactor",
    "P",
    "SeparableFactor",
    "StatePair",
    "SymbolicFactor",
    "TimeGrid",
    "WeylPolynomial",
    "X",
    "build_osc_operators",
    "normal_order",
    "picture_family",
]
