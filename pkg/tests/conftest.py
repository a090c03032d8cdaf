from dataclasses import replace

import pytest

from tripleslit.core import Geometry, preset


@pytest.fixture
def photon():
    return preset("photon")


@pytest.fixture
def small_geometry():
    """A few-wavelength aperture that the exact-propagator solver handles in
    well under a second."""
    return Geometry(slit_width=2.0, slit_separation=6.0, source_distance=200.0,
                    screen_distance=200.0, wavelength=1.0, slit_height=4.0)


def photon_at(L, D):
    return replace(preset("photon"), source_distance=L, screen_distance=D)


ACCEPTANCE_LINES = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
