import numpy as np
import pytest

from saflow import GridSpec, Sphere2
from saflow.initial import make_initial_data


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def sphere():
    return Sphere2()


@pytest.fixture(scope="session")
def grid64():
    return GridSpec(64)


@pytest.fixture(scope="session")
def grid128():
    return GridSpec(128)


@pytest.fixture
def latitude08(sphere, grid128):
    return make_initial_data("latitude(0.8)", grid128, sphere)


def max_norm(a):
    return float(np.max(np.linalg.norm(np.atleast_2d(a), axis=-1)))


ACCEPTANCE_LINES = pytest.StashKey[list]()


@pytest.fixture
def acceptance_line(request):
    """Record one PASS/FAIL line; all lines are repeated in the terminal summary."""
    lines = request.config.stash.setdefault(ACCEPTANCE_LINES, [])

    def record(number, title, passed, detail):
        line = f"{'PASS' if passed else 'FAIL'}  criterion {number}: {title} | {detail}"
        lines.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(ACCEPTANCE_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
