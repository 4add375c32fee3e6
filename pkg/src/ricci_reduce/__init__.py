"""Ricci-type symplectic connections obtained by reduction from quadrics in R^{2n+2}."""

from .core_linalg import SpElement, SymplecticSpace, extended_omega, standard_omega
from .reduction import ChristoffelField, Quadric, ReductionChart

__all__ = [
    "ChristoffelField",
    "Quadric",
    "ReductionChart",
    "SpElement",
    "SymplecticSpace",
    "extended_omega",
    "standard_omega",
]
