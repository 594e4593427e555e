import functools
import math

import pytest

from contactflow.container_coords import build_curvilinear_map
from contactflow.surface_core import ChartSpec, build_reference_surface

ACCEPTANCE_LINES = []


@functools.lru_cache(maxsize=None)
def chart(preset="spherical-cap", n_u=64, n_v=None, alpha=math.pi / 2, amplitude=None, mode=3):
    """Curvilinear map for a preset, cached across tests."""
    spec = ChartSpec(preset=preset, n_u=n_u, n_v=n_u // 2 if n_v is None else n_v, alpha=alpha,
                     perturbation_amplitude=amplitude, perturbation_mode=mode)
    return build_curvilinear_map(build_reference_surface(spec))


@pytest.fixture
def make_chart():
    return chart


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
