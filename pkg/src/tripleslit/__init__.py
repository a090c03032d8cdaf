"""Sorkin parameter of triple-slit interference from kinked Feynman paths."""

__version__ = "0.1.0"

from .core import (
    DetectorGrid,
    Geometry,
    GeometryError,
    KappaProfile,
    QuadratureSpec,
    RegimeWarning,
    SlitSet,
    fresnel_number,
    preset,
    rescale_to_dimensionless,
    validate_geometry,
)
from .analytic import ThickSlitModel, kappa_analytic, kappa_bound, thick_slit_profile

__all__ = [
    "DetectorGrid", "Geometry", "GeometryError", "KappaProfile", "QuadratureSpec", "RegimeWarning",
    "SlitSet", "fresnel_number", "preset", "rescale_to_dimensionless", "validate_geometry",
    "ThickSlitModel", "kappa_analytic", "kappa_bound", "thick_slit_profile",
]
