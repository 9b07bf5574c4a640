import pytest

from qfriction.units import (
    CavityGeometry,
    InternalDissipationModel,
    ParticleModel,
    ReflectionModel,
)

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def plate():
    return ReflectionModel(1.0, 1.0)


@pytest.fixture
def cavity(plate):
    return CavityGeometry(1.0, 1.0, plate, plate)


@pytest.fixture
def plane(plate):
    return CavityGeometry.plane(0.5, plate)


@pytest.fixture
def particle():
    return ParticleModel(dissipation=InternalDissipationModel.isotropic(1.0))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
