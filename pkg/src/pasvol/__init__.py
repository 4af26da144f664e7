"""Definable sets in Pas's three-sorted language over Q_p: Presburger
elimination, rigorous p-adic volume brackets, symbolic volumes in Q(L),
and finite-field tools for equal-valuation orbital integrals."""

from .formula import ParseError, SortError, free_variables, parse, sample_equivalent
from .motive import MotiveValue, filtration_degree, geometric_sum, specialize
from .mvol import compare, motivic_monomial_integral, motivic_volume
from .padic import PadicApprox, PadicContext, TruthValue, evaluate, volume_bounds
from .presburger import decide, eliminate

__all__ = [
    "MotiveValue",
    "PadicApprox",
    "PadicContext",
    "ParseError",
    "SortError",
    "TruthValue",
    "compare",
    "decide",
    "eliminate",
    "evaluate",
    "filtration_degree",
    "free_variables",
    "geometric_sum",
    "motivic_monomial_integral",
    "motivic_volume",
    "parse",
    "sample_equivalent",
    "specialize",
    "volume_bounds",
]
