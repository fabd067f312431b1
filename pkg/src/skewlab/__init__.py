"""Attractors, repellers and stationary measures of step skew products over
Markov chains with interval fibers."""

from .errors import (
    ConvergenceError,
    DomainError,
    GenericityError,
    InputError,
    MapValidationError,
    ParameterError,
    SearchError,
    SkewLabError,
    StructureError,
    TrappingRetry,
)
from .fibermaps import Affine, Blackbox, Moebius, TableMap, compose_word, fixed_points, path_map
from .markov import MarkovChain, is_transitive, reverse_chain, stationary_distribution, word
from .systems import SkewProduct

__version__ = "0.1.0"

__all__ = [
    "Affine",
    "Blackbox",
    "Moebius",
    "TableMap",
    "MarkovChain",
    "SkewProduct",
    "compose_word",
    "path_map",
    "fixed_points",
    "is_transitive",
    "reverse_chain",
    "stationary_distribution",
    "word",
    "SkewLabError",
    "InputError",
    "MapValidationError",
    "DomainError",
    "StructureError",
    "GenericityError",
    "ConvergenceError",
    "ParameterError",
    "SearchError",
    "TrappingRetry",
]
