"""Stallings graphs, Hanna Neumann checks and graphs of free groups."""

from .ghnc import GhncReport, classical_hn_check, ghnc_check
from .gog import GraphOfGroups, euler_characteristic, predicted_l2_betti
from .hall import hall_completion
from .phi import WeightedGraph, build_phi, classify
from .stallings import StallingsGraph, from_generators, intersection, pullback
from .words import Alphabet, CyclicWord, Word, parse_word, reduce

__version__ = "0.1.0"

__all__ = [
    "Alphabet",
    "CyclicWord",
    "GhncReport",
    "GraphOfGroups",
    "StallingsGraph",
    "WeightedGraph",
    "Word",
    "build_phi",
    "classical_hn_check",
    "classify",
    "euler_characteristic",
    "from_generators",
    "ghnc_check",
    "hall_completion",
    "intersection",
    "parse_word",
    "predicted_l2_betti",
    "pullback",
    "reduce",
]
