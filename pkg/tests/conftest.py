import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from hyperquantile import geometry as geo

settings.register_profile("default", deadline=None, max_examples=100,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def point_from_polar(r, theta, n=2):
    """Point at hyperbolic distance r from the origin in direction theta (plane only)."""
    return np.array([np.cosh(r), np.sinh(r) * np.cos(theta), np.sinh(r) * np.sin(theta)])


angles = st.floats(0.0, 2 * np.pi, allow_nan=False)
radii = st.floats(0.0, 4.0, allow_nan=False)


@st.composite
def points(draw, max_r=4.0):
    return point_from_polar(draw(st.floats(0.0, max_r)), draw(angles))


@st.composite
def tangents(draw, p, max_len=3.0):
    c = np.array([draw(st.floats(-max_len, max_len)), draw(st.floats(-max_len, max_len))])
    return geo.from_coords(geo.tangent_basis(p), c)


def random_points(rng, n, max_r=3.0):
    r = max_r * np.sqrt(rng.random(n))
    t = 2 * np.pi * rng.random(n)
    return np.column_stack([np.cosh(r), np.sinh(r) * np.cos(t), np.sinh(r) * np.sin(t)])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# One summary line per acceptance criterion, printed after the run.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":").rstrip("ab"))):
        terminalreporter.write_line(line)
