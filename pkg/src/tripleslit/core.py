"""Physical parameter records, presets and the Sorkin combination.

Lengths are SI metres at the API boundary. The Fraunhofer-regime code works
in k-rescaled units (every length multiplied by k = 2*pi/lambda), see
:func:`rescale_to_dimensionless`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Mapping, Optional

import numpy as np

SLIT_LABELS = ("A", "B", "C")

# |theta| <= THETA_MAX keeps the neglected small-angle remainder small while
# covering the +-3 degree window of the published profiles.
THETA_MAX = 0.2

# Geometries above this Fresnel number are flagged as leaving the far field.
FAR_FIELD_FRESNEL = 0.01


class GeometryError(ValueError):
    """A hard geometry invariant is violated; ``field`` names the culprit."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class DomainError(ValueError):
    """Detector angle outside the small-angle domain."""


class RegimeWarning(UserWarning):
    """Inputs are valid but outside the regime where an approximation holds."""


@dataclass(frozen=True)
class Geometry:
    """Slit apparatus. All lengths in metres.

    Slit y-extents are A: [d - w/2, d + w/2], B: [-w/2, w/2] and
    C: [-d - w/2, -d + w/2]. ``slit_height`` is only needed by the
    exact-propagator (Fresnel) solver and may be left unset otherwise.
    """

    slit_width: float
    slit_separation: float
    source_distance: float
    screen_distance: float
    wavelength: float
    thickness: float = 0.0
    slit_height: Optional[float] = None

    @property
    def k(self) -> float:
        return 2.0 * math.pi / self.wavelength

    def slit_extent(self, label: str) -> tuple[float, float]:
        centre = slit_centre(label, self.slit_separation)
        half = 0.5 * self.slit_width
        return centre - half, centre + half

    def to_dict(self) -> dict:
        return asdict(self)


def slit_centre(label: str, separation: float) -> float:
    try:
        return {"A": separation, "B": 0.0, "C": -separation}[label]
    except KeyError:
        raise ValueError(f"unknown slit label {label!r}") from None


@dataclass(frozen=True)
class DimensionlessGeometry:
    """Lengths multiplied by k; ``k`` is kept for the inverse map."""

    width: float
    separation: float
    source_distance: float
    screen_distance: float
    thickness: float
    k: float

    def extent(self, label: str) -> tuple[float, float]:
        centre = slit_centre(label, self.separation)
        return centre - 0.5 * self.width, centre + 0.5 * self.width


def regime_warnings(g: Geometry) -> list[str]:
    notes = []
    if g.wavelength >= g.slit_width:
        notes.append(
            f"wavelength {g.wavelength:g} m is not below slit width "
            f"{g.slit_width:g} m; the kw >> 1 asymptotics are unreliable"
        )
    F = fresnel_number(g)
    if F > FAR_FIELD_FRESNEL:
        notes.append(f"Fresnel number {F:.3g} exceeds far-field threshold {FAR_FIELD_FRESNEL}")
    return notes


def validate_geometry(g: Geometry) -> Geometry:
    """Check hard invariants and emit :class:`RegimeWarning` for soft ones.

    Returns ``g`` itself. Raises :class:`GeometryError` naming the field.
    """
    for name in ("slit_width", "slit_separation", "source_distance",
                 "screen_distance", "wavelength"):
        value = getattr(g, name)
        if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
            raise GeometryError(name, f"must be a positive finite length, got {value!r}")
    if not (math.isfinite(g.thickness) and g.thickness >= 0):
        raise GeometryError("thickness", f"must be >= 0, got {g.thickness!r}")
    if g.slit_height is not None and not (math.isfinite(g.slit_height) and g.slit_height > 0):
        raise GeometryError("slit_height", f"must be positive when given, got {g.slit_height!r}")
    if g.slit_separation <= g.slit_width:
        raise GeometryError(
            "slit_separation",
            f"d = {g.slit_separation:g} must exceed w = {g.slit_width:g} (slits overlap)",
        )
    for note in regime_warnings(g):
        warnings.warn(note, RegimeWarning, stacklevel=2)
    return g


def rescale_to_dimensionless(g: Geometry) -> DimensionlessGeometry:
    k = g.k
    return DimensionlessGeometry(
        width=k * g.slit_width,
        separation=k * g.slit_separation,
        source_distance=k * g.source_distance,
        screen_distance=k * g.screen_distance,
        thickness=k * g.thickness,
        k=k,
    )


def to_physical(dg: DimensionlessGeometry, wavelength: float,
                slit_height: Optional[float] = None) -> Geometry:
    """Inverse of :func:`rescale_to_dimensionless`."""
    k = dg.k
    return Geometry(
        slit_width=dg.width / k,
        slit_separation=dg.separation / k,
        source_distance=dg.source_distance / k,
        screen_distance=dg.screen_distance / k,
        wavelength=wavelength,
        thickness=dg.thickness / k,
        slit_height=slit_height,
    )


def fresnel_number(g: Geometry) -> float:
    """F = w^2 / (lambda D)."""
    return g.slit_width ** 2 / (g.wavelength * g.screen_distance)


PRESETS = ("photon", "electron", "fdtd")


def preset(name: str, wavelength: float = 1.0) -> Geometry:
    """Published parameter sets.

    ``wavelength`` only affects the ``fdtd`` preset, whose lengths are given
    in units of the wavelength.
    """
    if name == "photon":
        return Geometry(
            slit_width=30e-6, slit_separation=100e-6, wavelength=810e-9,
            source_distance=0.181, screen_distance=0.181, slit_height=300e-6,
        )
    if name == "electron":
        return Geometry(
            slit_width=62e-9, slit_separation=272e-9, wavelength=50e-12,
            source_distance=0.305, screen_distance=0.24,
        )
    if name == "fdtd":
        lam = float(wavelength)
        return Geometry(
            slit_width=lam, slit_separation=3 * lam, wavelength=lam,
            thickness=4 * lam, source_distance=1e4 * lam, screen_distance=1e4 * lam,
        )
    raise ValueError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")


@dataclass(frozen=True)
class SlitSet:
    """Non-empty set of open slits."""

    open_slits: frozenset

    def __post_init__(self):
        slits = frozenset(self.open_slits)
        if not slits:
            raise ValueError("a slit configuration needs at least one open slit")
        bad = slits - set(SLIT_LABELS)
        if bad:
            raise ValueError(f"unknown slit labels {sorted(bad)}")
        object.__setattr__(self, "open_slits", slits)

    @classmethod
    def parse(cls, text: str) -> "SlitSet":
        labels = list(text.upper())
        if len(set(labels)) != len(labels):
            raise ValueError(f"slit repeated in {text!r}")
        return cls(frozenset(labels))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(s for s in SLIT_LABELS if s in self.open_slits)

    def __str__(self):
        return "".join(self.labels)


# Sign of each configuration's intensity in
# eps = I_ABC - (I_AB + I_BC + I_CA) + (I_A + I_B + I_C).
SORKIN_TERMS: tuple[tuple[SlitSet, int], ...] = tuple(
    (SlitSet.parse(s), sign)
    for s, sign in (("ABC", 1), ("AB", -1), ("BC", -1), ("AC", -1),
                    ("A", 1), ("B", 1), ("C", 1))
)


def configuration_amplitude(slits: SlitSet, classical: Mapping, nonclassical: Optional[Mapping] = None):
    """Sum of classical amplitudes of the open slits plus every single-kink
    term ``nonclassical[(P, Q)]`` whose slits are both open."""
    labels = slits.labels
    total = sum(classical[p] for p in labels)
    if nonclassical:
        for p in labels:
            for q in labels:
                if p != q:
                    total = total + nonclassical[(p, q)]
    return total


def sorkin_combination(intensity: Callable[[SlitSet], float]):
    """Evaluate I_ABC - (I_AB + I_BC + I_CA) + (I_A + I_B + I_C).

    The three groups are summed separately before combining so the
    cancellation happens in one place.
    """
    triple = pairs = singles = 0.0
    for slits, sign in SORKIN_TERMS:
        n = len(slits.open_slits)
        value = intensity(slits)
        if n == 3:
            triple = triple + value
        elif n == 2:
            pairs = pairs + value
        else:
            singles = singles + value
    return triple - pairs + singles


def sorkin_from_amplitudes(classical: Mapping, nonclassical: Optional[Mapping] = None):
    """Full-mode epsilon from per-slit classical and ordered-pair kink amplitudes.

    Works element-wise when the amplitudes are arrays.
    """
    return sorkin_combination(
        lambda s: np.abs(configuration_amplitude(s, classical, nonclassical)) ** 2
    )


@dataclass(frozen=True)
class DetectorGrid:
    """Detector angles theta = y_D / D in radians, strictly increasing."""

    positions: tuple
    degrees: bool = False

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float).ravel()
        if pos.size == 0:
            raise ValueError("detector grid is empty")
        if not np.all(np.isfinite(pos)):
            raise ValueError("detector grid contains non-finite values")
        if pos.size > 1 and not np.all(np.diff(pos) > 0):
            raise ValueError("detector positions must be strictly increasing")
        if np.max(np.abs(pos)) > THETA_MAX:
            raise DomainError(f"|theta| must not exceed {THETA_MAX} rad")
        object.__setattr__(self, "positions", tuple(float(p) for p in pos))

    @classmethod
    def from_degrees(cls, start: float, stop: float, count: int) -> "DetectorGrid":
        if count < 1:
            raise ValueError("detector grid needs at least one point")
        return cls(tuple(np.radians(np.linspace(start, stop, count))), degrees=True)

    @classmethod
    def linspace(cls, start: float, stop: float, count: int) -> "DetectorGrid":
        if count < 1:
            raise ValueError("detector grid needs at least one point")
        return cls(tuple(np.linspace(start, stop, count)))

    @property
    def theta(self) -> np.ndarray:
        return np.array(self.positions)

    def display(self) -> np.ndarray:
        """Positions as written to output files."""
        return np.degrees(self.theta) if self.degrees else self.theta

    def __len__(self):
        return len(self.positions)


@dataclass(frozen=True)
class QuadratureSpec:
    """Resolution controls for the oscillatory integrals.

    ``samples_per_oscillation`` Gauss-Legendre nodes are placed per 2*pi of
    the fastest phase. Panels are doubled until two successive results agree
    to ``tolerance`` (relative to the largest magnitude) or ``max_panels`` is
    reached.
    """

    samples_per_oscillation: int = 24
    max_panels: int = 1 << 15
    tolerance: float = 1e-4

    def __post_init__(self):
        if self.samples_per_oscillation < 8:
            raise ValueError("samples_per_oscillation must be >= 8")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_panels < 1:
            raise ValueError("max_panels must be >= 1")


@dataclass(frozen=True)
class KappaProfile:
    """Sampled kappa curve with provenance."""

    abscissa: tuple
    kappa: tuple
    method: str
    geometry: Geometry
    quadrature: Optional[object] = None
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        abscissa = tuple(float(x) for x in np.ravel(self.abscissa))
        kappa = tuple(float(x) for x in np.ravel(self.kappa))
        if len(abscissa) != len(kappa):
            raise ValueError("abscissa and kappa differ in length")
        if self.method not in ("analytic", "fraunhofer", "fresnel"):
            raise ValueError(f"unknown method {self.method!r}")
        object.__setattr__(self, "abscissa", abscissa)
        object.__setattr__(self, "kappa", kappa)

    @property
    def values(self) -> np.ndarray:
        return np.array(self.kappa)

    def __len__(self):
        return len(self.kappa)


def central_lobes_window(theta: np.ndarray, kappa: np.ndarray, lobes: int = 3) -> float:
    """Half-width of the window holding the central ``lobes`` lobes of an
    even kappa curve sampled on ``theta``: the ``(lobes + 1) // 2``-th sign
    change on the positive side. Falls back to the largest |theta|."""
    theta = np.asarray(theta)
    kappa = np.asarray(kappa)
    pos = theta >= 0
    t, k = theta[pos], kappa[pos]
    order = np.argsort(t)
    t, k = t[order], k[order]
    flips = np.nonzero(np.sign(k[1:]) * np.sign(k[:-1]) < 0)[0]
    needed = (lobes + 1) // 2
    if len(flips) < needed:
        return float(np.max(np.abs(theta)))
    i = flips[needed - 1]
    # linear interpolation of the zero crossing
    return float(t[i] - k[i] * (t[i + 1] - t[i]) / (k[i + 1] - k[i]))


def as_array(values: Iterable[float] | float) -> np.ndarray:
    return np.atleast_1d(np.asarray(values, dtype=float))
