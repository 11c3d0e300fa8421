import pytest

from pdcsim.dispersion import calibrated_model
from pdcsim.jsa import source_jsa
from pdcsim.spectra import GaussianPump, RectFilter


@pytest.fixture(scope="session")
def model():
    return calibrated_model()


@pytest.fixture(scope="session")
def star_jsa(model):
    return source_jsa(model, GaussianPump(670.0, 2.0))


@pytest.fixture(scope="session")
def filtered_jsa(model):
    return source_jsa(model, GaussianPump(670.0, 2.0), idler_filter=RectFilter(1276.0, 3.0))


ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
