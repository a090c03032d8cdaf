"""Composite Gauss-Legendre panels and a panel-doubling driver."""

from __future__ import annotations

import math
from functools import lru_cache
from typing import Callable

import numpy as np

from .core import QuadratureSpec

GL_ORDER = 8


class QuadratureError(RuntimeError):
    """Panel doubling did not reach the requested tolerance."""

    def __init__(self, message: str, achieved: float, panels: int):
        super().__init__(f"{message} (achieved relative change {achieved:.3g} at {panels} panels)")
        self.achieved = achieved
        self.panels = panels


@lru_cache(maxsize=None)
def _legendre(order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre_panels(a: float, b: float, n_panels: int, order: int = GL_ORDER):
    """Nodes and weights of an ``n_panels``-panel, ``order``-point rule on [a, b]."""
    x, w = _legendre(order)
    edges = np.linspace(a, b, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x).ravel()
    weights = (half[:, None] * w).ravel()
    return nodes, weights


def panels_for(length: float, rate: float, q: QuadratureSpec, order: int = GL_ORDER) -> int:
    """Panels needed so at least ``q.samples_per_oscillation`` nodes fall in
    each 2*pi of a phase advancing at ``rate`` radians per unit length."""
    oscillations = abs(length) * rate / (2 * math.pi)
    return max(1, math.ceil(oscillations * q.samples_per_oscillation / order))


def converge(evaluate: Callable[[int], np.ndarray], base_panels: int, q: QuadratureSpec,
             scale: float = 0.0):
    """Double the panel count until successive results agree.

    ``evaluate(n)`` returns a (complex) array for ``n`` panels per dimension.
    Agreement is measured as max|new - old| / max(max|new|, scale); a
    positive ``scale`` (a bound on the integral's magnitude) keeps values
    sitting on an exact zero from stalling the loop. Returns
    ``(value, panels, achieved)``.
    """
    n = base_panels
    old = np.asarray(evaluate(n))
    achieved = math.inf
    while 2 * n <= q.max_panels:
        n *= 2
        new = np.asarray(evaluate(n))
        size = max(float(np.max(np.abs(new))), scale)
        achieved = 0.0 if size == 0 else float(np.max(np.abs(new - old)) / size)
        if achieved <= q.tolerance:
            return new, n, achieved
        old = new
    raise QuadratureError("panel budget exhausted before convergence", achieved, n)
