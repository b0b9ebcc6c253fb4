import numpy as np
import pytest

from rfplan import _kernels
from rfplan.geometry import free_space
from rfplan.pipeline import prepare
from rfplan.scenarios import builtin

SQUARE = [(0, 0), (10, 0), (10, 10), (0, 10)]
HOLE = [(4, 4), (6, 4), (6, 6), (4, 6)]


@pytest.fixture(params=_kernels.available_backends())
def backend(request):
    prev = _kernels.current_backend()
    _kernels.use_backend(request.param)
    yield request.param
    _kernels.use_backend(prev)


@pytest.fixture
def square():
    return free_space(SQUARE)


@pytest.fixture
def square_hole():
    return free_space(SQUARE, [HOLE])


@pytest.fixture
def box3d():
    return free_space([0, 0, 0, 1, 1, 1], [[0.4, 0.4, 0.4, 0.6, 0.6, 0.6]])


@pytest.fixture(scope="session")
def toy():
    return builtin("toy", 1)


@pytest.fixture(scope="session")
def toy_prepared(toy):
    return prepare(toy[1])


@pytest.fixture(scope="session")
def drone_prepared():
    return prepare(builtin("drone", 1)[1])


def ray_cast(rings, pt):
    """Independent even-odd ray-casting oracle (open boundary is fine for random points)."""
    x, y = pt
    inside = False
    for ring in rings:
        ring = np.asarray(ring, dtype=float)
        for (x1, y1), (x2, y2) in zip(ring, np.roll(ring, -1, axis=0)):
            if (y1 > y) != (y2 > y):
                xc = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
                if xc > x:
                    inside = not inside
    return inside


# filled by test_acceptance; echoed once at the end of the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
