import pytest

from ferrichain import LatticeSpec, build_dictionary, ground_state


def solve(n, s1="1/2", s2="3/2", boundary="ring", field=0.1, M=None, **kw):
    lat = LatticeSpec.alternating(n, s1, s2, boundary, 1.0, field)
    gs, report = ground_state(lat, lat.neel_sz if M is None else M, **kw)
    return gs


@pytest.fixture(scope="session")
def ring14():
    """(1/2, 3/2) ring, N=14, B=0.1, Néel sector."""
    return solve(14)


@pytest.fixture(scope="session")
def ring14_spin1():
    return solve(14, "1/2", "1")


@pytest.fixture(scope="session")
def ring12():
    return solve(12)


@pytest.fixture(scope="session")
def open12():
    return solve(12, boundary="open")


@pytest.fixture(scope="session")
def heis12():
    """Uniform spin-1/2 ring, N=12, B=0.1 (singlet sector)."""
    return solve(12, "1/2", "1/2")


@pytest.fixture(scope="session")
def dict14(ring14):
    return build_dictionary(ring14)


@pytest.fixture(scope="session")
def ring8():
    return solve(8)


# acceptance lines, filled by test_acceptance.py and printed at the end of the run
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n])
