"""Closed-form kappa in the Fraunhofer, thin-slit limit.

All formulas take k-rescaled lengths (``d``, ``w`` are k*d and k*w) unless
they accept a :class:`~tripleslit.core.Geometry`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .core import (
    THETA_MAX,
    DetectorGrid,
    DomainError,
    Geometry,
    KappaProfile,
    RegimeWarning,
    fresnel_number,
    rescale_to_dimensionless,
    validate_geometry,
)

QUARTER_PI = 0.25 * math.pi

# Above this Fresnel number the closed form is off by more than ~10 % at the centre.
ANALYTIC_FRESNEL_LIMIT = 1e-3


def _check_theta(theta: np.ndarray) -> None:
    if np.any(np.abs(theta) > THETA_MAX):
        raise DomainError(f"|theta| must not exceed {THETA_MAX} rad")


def _edge_terms(d: float, w: float, theta: np.ndarray):
    """The bracket and the four edge corrections of f, without the common
    1/cos(w theta/2) divisor."""
    c = np.cos
    bracket = (2 * c(2 * d * theta) * c(d - QUARTER_PI)
               + math.sqrt(2) * c(d * theta) * c(2 * d - QUARTER_PI)
               + 2 * c(d * theta) * c(d - QUARTER_PI))
    edges = (
        2 * math.sqrt(d / (d - w)) * c((d - w) * theta / 2) * c(3 * d * theta / 2) * c(d - w - QUARTER_PI)
        + 2 * math.sqrt(d / (d + w)) * c((d + w) * theta / 2) * c(3 * d * theta / 2) * c(d + w - QUARTER_PI)
        + math.sqrt(d / (2 * d - w)) * c((2 * d - w) * theta / 2) * c(2 * d - w - QUARTER_PI)
        + math.sqrt(d / (2 * d + w)) * c((2 * d + w) * theta / 2) * c(2 * d + w - QUARTER_PI)
    )
    return bracket, edges


def f_envelope(d: float, w: float, theta):
    """Angular envelope f(d, w, theta) of the closed-form kappa.

    ``d`` and ``w`` are k-rescaled. Requires d > w > 0 and |theta| <= 0.2.
    Evaluated literally, so it diverges where cos(w*theta/2) = 0; use
    :func:`kappa_closed_form` for kappa itself.
    """
    if not d > w > 0:
        raise ValueError("need d > w > 0")
    theta = np.asarray(theta, dtype=float)
    _check_theta(theta)
    bracket, edges = _edge_terms(d, w, theta)
    return bracket - edges / np.cos(w * theta / 2)


def kappa_closed_form(d: float, w: float, theta):
    """kappa(theta) = sin(w theta) / (w^2 theta) * f(d, w, theta) / (9 sqrt(2 pi d)).

    Uses sin(w theta)/cos(w theta/2) = 2 sin(w theta/2) so the expression
    stays finite for any w*theta; theta = 0 takes the limit sin(w theta)/theta -> w.
    """
    if not d > w > 0:
        raise ValueError("need d > w > 0")
    theta = np.asarray(theta, dtype=float)
    _check_theta(theta)
    bracket, edges = _edge_terms(d, w, theta)
    zero = theta == 0
    safe = np.where(zero, 1.0, theta)
    sin_full = np.where(zero, w, np.sin(w * theta) / safe)
    sin_half = np.where(zero, w, 2 * np.sin(w * theta / 2) / safe)
    return (sin_full * bracket - sin_half * edges) / (9 * math.sqrt(2 * math.pi * d) * w * w)


def kappa_analytic(g: Geometry, grid: DetectorGrid) -> KappaProfile:
    validate_geometry(g)
    F = fresnel_number(g)
    if F > ANALYTIC_FRESNEL_LIMIT:
        warnings.warn(
            f"Fresnel number {F:.3g} > {ANALYTIC_FRESNEL_LIMIT}; closed form is a far-field result",
            RegimeWarning, stacklevel=2,
        )
    dg = rescale_to_dimensionless(g)
    kappa = kappa_closed_form(dg.separation, dg.width, grid.theta)
    return KappaProfile(
        abscissa=grid.display(), kappa=kappa, method="analytic", geometry=g,
        metadata={"fresnel_number": F, "abscissa_unit": "deg" if grid.degrees else "rad"},
    )


def kappa_bound(g: Geometry) -> float:
    """Magnitude bound 0.03 lambda^{3/2} / (d^{1/2} w)."""
    validate_geometry(g)
    if g.k * g.slit_width < 10 or g.slit_separation < 3 * g.slit_width:
        warnings.warn("bound derived for kw >> 1 and d >> w", RegimeWarning, stacklevel=2)
    return 0.03 * g.wavelength ** 1.5 / (math.sqrt(g.slit_separation) * g.slit_width)


@dataclass(frozen=True)
class ThickSlitModel:
    """Lossy-wall correction for slits of finite thickness.

    ``n_real`` is recorded only. ``attenuation_threshold`` is the field
    fraction at which the penetration depth is read off; ``amplitude_factor``
    multiplies kappa to account for kinks at either face of the slit plate.
    """

    n_imag: float
    n_real: Optional[float] = None
    attenuation_threshold: float = 0.30
    amplitude_factor: float = 4.0

    def __post_init__(self):
        if not self.n_imag > 0:
            raise ValueError("n_imag must be positive")
        if not 0 < self.attenuation_threshold < 1:
            raise ValueError("attenuation_threshold must lie in (0, 1)")
        if not self.amplitude_factor > 0:
            raise ValueError("amplitude_factor must be positive")


STEEL = ThickSlitModel(n_imag=2.61, n_real=2.29)


def penetration_depth(wavelength: float, model: ThickSlitModel) -> float:
    """Depth x with exp(-2 pi n_I x / lambda) equal to the threshold."""
    if math.isinf(model.n_imag):
        return 0.0
    return -wavelength * math.log(model.attenuation_threshold) / (2 * math.pi * model.n_imag)


def effective_width(w: float, wavelength: float, model: ThickSlitModel) -> float:
    return w + 2 * penetration_depth(wavelength, model)


def thick_slit_profile(g: Geometry, model: ThickSlitModel, grid: DetectorGrid) -> KappaProfile:
    if not g.thickness > 0:
        raise ValueError("thick-slit profile needs thickness > 0")
    if g.thickness > 10 * g.wavelength:
        warnings.warn("thickness above 10 wavelengths; in-phase kink argument fails",
                      RegimeWarning, stacklevel=2)
    w_eff = effective_width(g.slit_width, g.wavelength, model)
    widened = replace(g, slit_width=w_eff)
    base = kappa_analytic(widened, grid)
    return KappaProfile(
        abscissa=base.abscissa,
        kappa=model.amplitude_factor * base.values,
        method="analytic",
        geometry=g,
        metadata={
            **base.metadata,
            "thick_slit": True,
            "effective_width": w_eff,
            "amplitude_factor": model.amplitude_factor,
            "n_imag": model.n_imag,
            "attenuation_threshold": model.attenuation_threshold,
        },
    )
