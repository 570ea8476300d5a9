import pytest
from hypothesis import settings

from hsground.closedform import ProblemParams, hardy_constant
from hsground.grid import build_grid

settings.register_profile("default", max_examples=30, deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def grid4():
    return build_grid(4)


@pytest.fixture(scope="session")
def grid3():
    return build_grid(3)


@pytest.fixture(scope="session")
def params4():
    """Subcritical coupling at N=4 with equal levels."""
    return ProblemParams(4, 0.5, 0.5, 1.0, 1.0, 1.0, 1.4, 1.4, nu=1.0, h_q=6.0)


@pytest.fixture(scope="session")
def params3():
    """N=3 with alpha, beta > 2 and c1 > c2 > c1/2."""
    L = hardy_constant(3)
    return ProblemParams(3, 0.3 * L, 0.4 * L, 0.5, 0.5, 0.5, 2.2, 2.2, nu=0.01, h_q=5.0)


def pytest_terminal_summary(terminalreporter):
    """Repeat the one-line verdict of every acceptance criterion at the end of the run."""
    lines = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if "test_acceptance.py" not in rep.nodeid or rep.when != "call":
                continue
            for _, text in rep.sections:
                lines += [ln for ln in text.splitlines() if ln.startswith("CRITERION ")]
    if lines:
        terminalreporter.section("acceptance criteria")
        for ln in sorted(lines, key=lambda t: int(t.split()[1])):
            terminalreporter.write_line(ln)
