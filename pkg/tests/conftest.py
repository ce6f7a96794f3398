import pytest

from lctransport import catalog
from lctransport.measures import make_measure

# criterion number -> (passed, detail), filled by test_acceptance.py
ACCEPTANCE = {}


@pytest.fixture(scope="session")
def std_gauss():
    return make_measure(catalog.gaussian(1.0))


@pytest.fixture(scope="session")
def bump02():
    return catalog.bump(0.2, 1.0)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
