import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tripleslit.core import QuadratureSpec
from tripleslit.quadrature import QuadratureError, converge, gauss_legendre_panels, panels_for


@settings(max_examples=50, deadline=None, derandomize=True)
@given(st.floats(-10, 10), st.floats(0.1, 10), st.integers(1, 20), st.integers(0, 15))
def test_panels_integrate_polynomials_exactly(a, length, panels, degree):
    b = a + length
    x, w = gauss_legendre_panels(a, b, panels)
    exact = (b ** (degree + 1) - a ** (degree + 1)) / (degree + 1)
    assert np.sum(w * x ** degree) == pytest.approx(exact, rel=1e-10, abs=1e-10 * max(1, abs(b) ** (degree + 1)))


def test_oscillatory_integral():
    t = 37.3
    x, w = gauss_legendre_panels(-2.0, 3.0, panels_for(5.0, t, QuadratureSpec()))
    exact = (np.exp(1j * t * 3.0) - np.exp(-1j * t * 2.0)) / (1j * t)
    assert abs(np.sum(w * np.exp(1j * t * x)) - exact) < 1e-12


def test_panels_for_scales_with_rate():
    q = QuadratureSpec(samples_per_oscillation=16)
    assert panels_for(2 * math.pi, 1.0, q) == 2
    assert panels_for(2 * math.pi, 100.0, q) == 200
    assert panels_for(1e-9, 1.0, q) == 1


def test_converge_doubles_until_agreement():
    calls = []

    def evaluate(n):
        calls.append(n)
        x, w = gauss_legendre_panels(0.0, 50.0, n, order=2)
        return np.array([np.sum(w * np.cos(x))])

    value, panels, achieved = converge(evaluate, 1, QuadratureSpec(tolerance=1e-8))
    assert value[0] == pytest.approx(math.sin(50.0), abs=1e-7)
    assert calls == [2 ** i for i in range(len(calls))]
    assert achieved <= 1e-8 and panels == calls[-1]


def test_converge_reports_failure():
    rng = np.random.default_rng(0)
    with pytest.raises(QuadratureError) as info:
        converge(lambda n: rng.normal(size=3), 1, QuadratureSpec(max_panels=8))
    assert info.value.panels == 8
    assert info.value.achieved > 0
