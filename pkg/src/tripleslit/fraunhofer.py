"""Path-integral kappa in the far field by direct quadrature.

Amplitudes are computed in k-rescaled units (k = 1): every length is k times
its physical value. The classical amplitude of slit P is

    psi_P = -gamma / (4 pi^2) * int_P exp(-i y theta) dy

and the single-kink amplitude for the path source -> P -> Q -> detector is

    psi_PQ = gamma i^{3/2} (2 pi)^{-5/2} / 4 * int_P dy1 int_Q dy2
             |y2 - y1|^{-1/2} exp(i |y2 - y1| - i y2 theta)

with gamma = exp(i (L + D)) / (L D). The trailing 1/4 is the inclination
factor. ``gamma`` is common to every amplitude and cancels in kappa.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import (
    SLIT_LABELS,
    THETA_MAX,
    DetectorGrid,
    DomainError,
    Geometry,
    KappaProfile,
    QuadratureSpec,
    RegimeWarning,
    SlitSet,
    configuration_amplitude,
    fresnel_number,
    rescale_to_dimensionless,
    sorkin_from_amplitudes,
    validate_geometry,
)
from .quadrature import GL_ORDER, converge, gauss_legendre_panels, panels_for

CLASSICAL_PREFACTOR = -1.0 / (4 * math.pi ** 2)
INCLINATION = 0.25
# i^{3/2} on the principal branch
KINK_PHASE = cmath.exp(0.75j * math.pi)
KINK_PREFACTOR = KINK_PHASE * (2 * math.pi) ** -2.5 * INCLINATION
# each further hop: one more stationary-phase factor i^{1/2} / (2 pi) and inclination
EXTRA_HOP_PREFACTOR = cmath.exp(0.25j * math.pi) / (2 * math.pi) * INCLINATION

# Above this many node pairs the tensor-product rule gives way to the
# difference-variable rule.
TENSOR_BUDGET = 6_000_000
_CHUNK = 2_000_000

ASYMPTOTIC_MIN_GAP = 10.0

PAIRS = tuple((p, q) for p in SLIT_LABELS for q in SLIT_LABELS if p != q)


@dataclass(frozen=True)
class FraunhoferContext:
    """k-rescaled apparatus: slit width, centre spacing, source and screen distances."""

    width: float
    separation: float
    source_distance: float
    screen_distance: float
    k: float = 1.0

    def __post_init__(self):
        if not (self.width > 0 and self.separation > self.width):
            raise ValueError("slit intervals must be disjoint: need separation > width > 0")
        if not (self.source_distance > 0 and self.screen_distance > 0):
            raise ValueError("distances must be positive")

    @classmethod
    def from_geometry(cls, g: Geometry) -> "FraunhoferContext":
        validate_geometry(g)
        dg = rescale_to_dimensionless(g)
        return cls(dg.width, dg.separation, dg.source_distance, dg.screen_distance, dg.k)

    @property
    def gamma(self) -> complex:
        """exp(i(L + D)) / (L D) in rescaled units."""
        L, D = self.source_distance, self.screen_distance
        return cmath.exp(1j * math.fmod(L + D, 2 * math.pi)) / (L * D)

    @property
    def gamma_physical(self) -> complex:
        """The same factor with L and D in metres (modulus 1/(L D))."""
        return self.gamma * self.k ** 2

    def extent(self, label: str) -> tuple[float, float]:
        centre = {"A": self.separation, "B": 0.0, "C": -self.separation}[label]
        return centre - 0.5 * self.width, centre + 0.5 * self.width

    @property
    def extents(self) -> dict:
        return {s: self.extent(s) for s in SLIT_LABELS}

    @property
    def gap(self) -> float:
        """Edge-to-edge distance between neighbouring slits."""
        return self.separation - self.width


@dataclass(frozen=True)
class PathSpec:
    slit_sequence: tuple
    quadrature: QuadratureSpec = field(default_factory=QuadratureSpec)

    def __post_init__(self):
        seq = tuple(self.slit_sequence)
        if not 1 <= len(seq) <= 3:
            raise ValueError("paths visit one to three slits")
        for s in seq:
            if s not in SLIT_LABELS:
                raise ValueError(f"unknown slit {s!r}")
        for a, b in zip(seq, seq[1:]):
            if a == b:
                raise ValueError(f"consecutive slits must differ: {''.join(seq)}")
        object.__setattr__(self, "slit_sequence", seq)


def _theta_array(theta) -> tuple[np.ndarray, bool]:
    arr = np.asarray(theta, dtype=float)
    scalar = arr.ndim == 0
    arr = np.atleast_1d(arr)
    if np.any(np.abs(arr) > THETA_MAX):
        raise DomainError(f"|theta| must not exceed {THETA_MAX} rad")
    return arr, scalar


def _out(values: np.ndarray, scalar: bool):
    return complex(values[0]) if scalar else values


def _quadratic(y: np.ndarray, distance: float) -> np.ndarray:
    return np.exp(0.5j * y * y / distance)


def _hop(u: np.ndarray) -> np.ndarray:
    a = np.abs(u)
    return np.exp(1j * a) / np.sqrt(a)


def _rate(theta: np.ndarray, ctx: FraunhoferContext, keep_quadratic: bool) -> float:
    rate = float(np.max(np.abs(theta)))
    if keep_quadratic:
        ymax = ctx.separation + ctx.width
        rate += ymax * (1 / ctx.source_distance + 1 / ctx.screen_distance)
    return rate


def classical_amplitude(slit: str, theta, ctx: FraunhoferContext,
                        q: Optional[QuadratureSpec] = None, keep_quadratic: bool = False):
    """Straight-path amplitude through one slit.

    With ``keep_quadratic`` the exp(i[y^2/2L + y^2/2D]) phase is retained;
    the y_D^2/2D phase is common to every path and dropped.
    """
    q = q or QuadratureSpec()
    th, scalar = _theta_array(theta)
    a, b = ctx.extent(slit)
    rate = max(_rate(th, ctx, keep_quadratic), 1.0)

    def evaluate(n):
        y, wts = gauss_legendre_panels(a, b, n)
        if keep_quadratic:
            wts = wts * _quadratic(y, ctx.source_distance) * _quadratic(y, ctx.screen_distance)
        return np.exp(-1j * np.outer(th, y)) @ wts

    # |integral| <= slit width, which sets the floor near diffraction zeros
    value, _, _ = converge(evaluate, panels_for(b - a, rate, q), q, scale=b - a)
    return _out(ctx.gamma * CLASSICAL_PREFACTOR * value, scalar)


def _kink_tensor(P, Q, th, ctx, n, keep_quadratic):
    """int_P int_Q |y2-y1|^{-1/2} e^{i|y2-y1| - i y2 theta} on n x n panels."""
    y1, w1 = gauss_legendre_panels(*ctx.extent(P), n)
    y2, w2 = gauss_legendre_panels(*ctx.extent(Q), n)
    if keep_quadratic:
        w1 = w1 * _quadratic(y1, ctx.source_distance)
        w2 = w2 * _quadratic(y2, ctx.screen_distance)
    inner = np.empty(len(y2), dtype=complex)
    step = max(1, _CHUNK // len(y1))
    for s in range(0, len(y2), step):
        block = _hop(y2[s:s + step, None] - y1[None, :])
        inner[s:s + step] = np.sum(block * w1, axis=1)
    return np.exp(-1j * np.outer(th, y2)) @ (w2 * inner)


def _kink_reduced(P, Q, th, ctx, n):
    """Same integral on the difference variable u = y2 - y1 with the y2
    integral done in closed form. Only valid without quadratic phases."""
    a, b = ctx.extent(P)
    p, q = ctx.extent(Q)
    breaks = sorted({p - b, q - a, p - a, q - b})
    total = np.zeros(len(th), dtype=complex)
    span = breaks[-1] - breaks[0]
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        if hi <= lo:
            continue
        m = max(1, math.ceil(n * (hi - lo) / span))
        u, wu = gauss_legendre_panels(lo, hi, m)
        y_lo = np.maximum(p, a + u)
        y_hi = np.minimum(q, b + u)
        length = y_hi - y_lo
        mid = 0.5 * (y_hi + y_lo)
        f = wu * _hop(u)
        step = max(1, _CHUNK // len(u))
        for s in range(0, len(th), step):
            t = th[s:s + step, None]
            # int_{y_lo}^{y_hi} e^{-i y t} dy = length e^{-i mid t} sinc(length t / 2)
            window = length * np.exp(-1j * mid * t) * np.sinc(length * t / (2 * math.pi))
            total[s:s + step] += window @ f
    return total


def _pick_scheme(scheme: str, n: int, keep_quadratic: bool) -> str:
    if scheme not in ("auto", "tensor", "reduced"):
        raise ValueError(f"unknown scheme {scheme!r}")
    if scheme == "reduced" and keep_quadratic:
        raise ValueError("the reduced scheme cannot carry quadratic phases")
    if scheme == "auto":
        nodes = n * GL_ORDER
        return "tensor" if keep_quadratic or nodes * nodes * 4 <= TENSOR_BUDGET else "reduced"
    return scheme


def nonclassical_amplitude_quadrature(P: str, Q: str, theta, ctx: FraunhoferContext,
                                      q: Optional[QuadratureSpec] = None, *,
                                      keep_quadratic: bool = False, scheme: str = "auto"):
    """Single-kink amplitude source -> P -> Q -> detector by panel quadrature.

    ``scheme="tensor"`` integrates both slit coordinates on Gauss-Legendre
    panels; ``"reduced"`` integrates the hop length u = y2 - y1 numerically
    and the remaining y2 integral exactly. ``"auto"`` uses the tensor rule
    unless the node count is prohibitive.
    """
    if P == Q:
        raise ValueError("a kinked path needs two different slits")
    q = q or QuadratureSpec()
    th, scalar = _theta_array(theta)
    rate = 1.0 + _rate(th, ctx, keep_quadratic)
    base = panels_for(ctx.width, rate, q)
    chosen = _pick_scheme(scheme, base, keep_quadratic)
    if chosen == "tensor":
        value, _, _ = converge(lambda n: _kink_tensor(P, Q, th, ctx, n, keep_quadratic), base, q)
    else:
        value, _, _ = converge(lambda n: _kink_reduced(P, Q, th, ctx, 2 * n), base, q)
    return _out(ctx.gamma * KINK_PREFACTOR * value, scalar)


def kink_integral_asymptotic(P: str, Q: str, theta, ctx: FraunhoferContext):
    """Leading integration-by-parts term of the double hop integral.

    Each endpoint pair (c, y2) with c in {a, b} (ends of slit P) and y2 in
    {p, q} (ends of slit Q) contributes exp(i|c - y2| - i y2 theta) /
    |c - y2|^{1/2}; the branch of |c - y2| is picked by which slit is above.
    """
    th = np.asarray(theta, dtype=float)
    a, b = ctx.extent(P)
    p, q = ctx.extent(Q)

    def term(c, y2):
        if c > y2:
            return np.exp(1j * (c - y2) - 1j * y2 * th) / math.sqrt(c - y2)
        return np.exp(-1j * (c - y2) - 1j * y2 * th) / math.sqrt(y2 - c)

    return (term(b, q) - term(b, p)) - (term(a, q) - term(a, p))


def nonclassical_amplitude_asymptotic(P: str, Q: str, theta, ctx: FraunhoferContext):
    if P == Q:
        raise ValueError("a kinked path needs two different slits")
    th, scalar = _theta_array(theta)
    if ctx.gap < ASYMPTOTIC_MIN_GAP:
        warnings.warn(f"slit gap {ctx.gap:.3g} (rescaled) is too small for the asymptotic form",
                      RegimeWarning, stacklevel=2)
    value = kink_integral_asymptotic(P, Q, th, ctx)
    return _out(ctx.gamma * KINK_PREFACTOR * value, scalar)


def _double_kink(P, Q, R, th, ctx, n):
    y1, w1 = gauss_legendre_panels(*ctx.extent(P), n)
    y2, w2 = gauss_legendre_panels(*ctx.extent(Q), n)
    y3, w3 = gauss_legendre_panels(*ctx.extent(R), n)
    first = np.sum(_hop(y2[:, None] - y1[None, :]) * w1, axis=1)
    last = _hop(y3[None, :] - y2[:, None]) @ (w3[:, None] * np.exp(-1j * np.outer(y3, th)))
    return (w2 * first) @ last


def multi_kink_amplitude(path: PathSpec, theta, ctx: FraunhoferContext):
    """Amplitude of a path visiting the slits in ``path.slit_sequence``.

    One slit gives the classical amplitude, two the single-kink amplitude.
    Three slits carry two hop factors, with one more i^{1/2}/(2 pi)
    stationary-phase factor and one more inclination factor than a single kink.
    """
    seq = path.slit_sequence
    q = path.quadrature
    if len(seq) == 1:
        return classical_amplitude(seq[0], theta, ctx, q)
    if len(seq) == 2:
        return nonclassical_amplitude_quadrature(seq[0], seq[1], theta, ctx, q)
    th, scalar = _theta_array(theta)
    base = panels_for(ctx.width, 1.0 + float(np.max(np.abs(th))), q)
    value, _, _ = converge(lambda n: _double_kink(*seq, th, ctx, n), base, q)
    return _out(ctx.gamma * KINK_PREFACTOR * EXTRA_HOP_PREFACTOR * value, scalar)


def amplitudes(theta, ctx: FraunhoferContext, q: Optional[QuadratureSpec] = None, *,
               keep_quadratic: bool = False, nonclassical: bool = True, scheme: str = "auto"):
    """Classical amplitudes per slit and kink amplitudes per ordered pair."""
    q = q or QuadratureSpec()
    classical = {s: classical_amplitude(s, theta, ctx, q, keep_quadratic) for s in SLIT_LABELS}
    if not nonclassical:
        zero = classical["A"] * 0
        return classical, {pq: zero for pq in PAIRS}
    kinks = {
        (p, r): nonclassical_amplitude_quadrature(p, r, theta, ctx, q,
                                                  keep_quadratic=keep_quadratic, scheme=scheme)
        for p, r in PAIRS
    }
    return classical, kinks


def first_order_epsilon(classical, kinks):
    """2 Re[psi_A^*(psi_BC + psi_CB) + psi_B^*(psi_AC + psi_CA) + psi_C^*(psi_AB + psi_BA)]."""
    total = 0
    for s in SLIT_LABELS:
        u, v = (x for x in SLIT_LABELS if x != s)
        total = total + np.conj(classical[s]) * (kinks[(u, v)] + kinks[(v, u)])
    return 2 * np.real(total)


def epsilon_from_amplitudes(classical, kinks, mode: str = "full"):
    if mode == "full":
        return sorkin_from_amplitudes(classical, kinks)
    if mode == "first_order":
        return first_order_epsilon(classical, kinks)
    raise ValueError(f"unknown mode {mode!r}")


def sorkin_epsilon(theta, ctx: FraunhoferContext, q: Optional[QuadratureSpec] = None,
                   mode: str = "full", *, keep_quadratic: bool = False,
                   nonclassical: bool = True, scheme: str = "auto"):
    """Numerator of kappa at detector angle(s) ``theta``."""
    classical, kinks = amplitudes(theta, ctx, q, keep_quadratic=keep_quadratic,
                                  nonclassical=nonclassical, scheme=scheme)
    eps = epsilon_from_amplitudes(classical, kinks, mode)
    return float(eps) if np.ndim(eps) == 0 else eps


def kappa_numeric_profile(g: Geometry, grid: DetectorGrid, q: Optional[QuadratureSpec] = None,
                          mode: str = "full", *, keep_quadratic: bool = True,
                          scheme: str = "auto") -> KappaProfile:
    """kappa(theta) = eps(theta) / I_ABC(0) from quadrature amplitudes.

    ``keep_quadratic`` retains the y^2/2L and y^2/2D phases on every path,
    which is what makes the result depend on the Fresnel number.
    """
    q = q or QuadratureSpec()
    ctx = FraunhoferContext.from_geometry(g)
    theta = grid.theta
    has_zero = bool(np.any(theta == 0))
    th = theta if has_zero else np.append(theta, 0.0)
    classical, kinks = amplitudes(th, ctx, q, keep_quadratic=keep_quadratic, scheme=scheme)
    eps = epsilon_from_amplitudes(classical, kinks, mode)
    i0 = int(np.nonzero(th == 0)[0][0])
    centre = configuration_amplitude(SlitSet.parse("ABC"),
                                     {s: v[i0] for s, v in classical.items()},
                                     {pq: v[i0] for pq, v in kinks.items()})
    delta = abs(centre) ** 2
    kappa = eps[: len(theta)] / delta
    return KappaProfile(
        abscissa=grid.display(), kappa=kappa, method="fraunhofer", geometry=g, quadrature=q,
        metadata={
            "mode": mode,
            "keep_quadratic": keep_quadratic,
            "fresnel_number": fresnel_number(g),
            "delta": delta,
            "abscissa_unit": "deg" if grid.degrees else "rad",
        },
    )
