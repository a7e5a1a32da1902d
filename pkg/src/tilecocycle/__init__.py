"""Substitution tilings in integer address coordinates and their spectral cocycles."""

from .algebra import CubicClass, CubicParams, classify_cubic, complex_root
from .models import get_model, kenyon_system, square_system
from .substitution import SubstitutionSystem, expand_supertile, pf_data, substitution_matrix

__version__ = "0.1.0"

__all__ = [
    "CubicClass",
    "CubicParams",
    "SubstitutionSystem",
    "classify_cubic",
    "complex_root",
    "expand_supertile",
    "get_model",
    "kenyon_system",
    "pf_data",
    "square_system",
    "substitution_matrix",
]
