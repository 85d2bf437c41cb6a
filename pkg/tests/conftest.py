import numpy as np
import pytest

from nodal_atlas.mesh import build_preset


@pytest.fixture(scope="session")
def torus32():
    return build_preset("flat_torus", 32)


@pytest.fixture(scope="session")
def torus64():
    return build_preset("flat_torus", 64)


@pytest.fixture(scope="session")
def sphere3():
    return build_preset("round_sphere", 3)


@pytest.fixture(scope="session")
def disc24():
    return build_preset("unit_disc", 24)


def torus_xy(mesh):
    return mesh.vertices[:, 0], mesh.vertices[:, 1]


def polar(mesh, center=(0.0, 0.0)):
    p = mesh.vertices[:, :2] - np.asarray(center)
    return np.hypot(p[:, 0], p[:, 1]), np.arctan2(p[:, 1], p[:, 0])


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
