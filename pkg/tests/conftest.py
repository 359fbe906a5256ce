import numpy as np
import pytest
from hypothesis import settings

from cvtok.walker import generate_corpus

# numba oracles compile on first call
settings.register_profile("cvtok", deadline=None)
settings.load_profile("cvtok")

_criteria: dict[str, tuple[bool, str]] = {}


@pytest.fixture
def criterion(request):
    """Record the outcome of an acceptance criterion for the summary table."""
    name = request.node.get_closest_marker("criterion").args[0]
    _criteria[name] = (False, "did not complete")

    def done(detail: str = ""):
        _criteria[name] = (True, detail)

    return done


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_criteria, key=lambda n: int(n.split()[0])):
        ok, detail = _criteria[name]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")


@pytest.fixture(scope="session")
def small_corpus():
    """Four 30-frame hole-free walkers at 64x44."""
    return generate_corpus(1, 4, 30)


@pytest.fixture(scope="session")
def corpus_1000():
    """1000 frames: 25 sequences of 40."""
    return generate_corpus(7, 25, 40)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
