import numpy as np
import pytest

from layerheat import QuadratureSpec

_CRITERIA = pytest.StashKey[dict]()


@pytest.fixture
def spec():
    return QuadratureSpec()


@pytest.fixture
def rng():
    return np.random.default_rng(20261016)


@pytest.fixture
def criterion(request, capsys):
    """``criterion(n, title, passed, detail)`` prints and records one acceptance line."""
    lines = request.config.stash.setdefault(_CRITERIA, {})

    def record(n, title, passed, detail):
        line = f"criterion {n} {title}: {'PASS' if passed else 'FAIL'}  {detail}"
        lines[(n, title)] = line
        with capsys.disabled():
            print("\n" + line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_CRITERIA, {})
    if lines:
        terminalreporter.section("acceptance criteria")
        for key in sorted(lines):
            terminalreporter.write_line(lines[key])
