import numpy as np
import pytest

from nlspectra.instanton import master_grid, restrict_to, solve_instanton
from nlspectra.kernels import build_grid, standard_kernel
from nlspectra.scan import ScanConfig, run_scan
from nlspectra.spectral import analyze

REF_L = [5.0, 7.0, 10.0, 15.0, 20.0]

_CRITERIA: list[str] = []


def record_criterion(number: int, title: str, passed: bool, detail: str = "") -> None:
    line = f"criterion {number:2d} [{'PASS' if passed else 'FAIL'}] {title}" + (f" :: {detail}" if detail else "")
    _CRITERIA.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_CRITERIA):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def kernel():
    return standard_kernel()


@pytest.fixture(scope="session")
def profile(kernel):
    """beta = 2 instanton on the master grid for L up to 10 (L_max = 20)."""
    return solve_instanton(2.0, kernel, master_grid(10, 40))


@pytest.fixture(scope="session")
def profile20(kernel):
    return solve_instanton(2.0, kernel, master_grid(20, 40))


@pytest.fixture(scope="session")
def restriction(profile):
    def make(L, prof=None):
        return restrict_to(prof or profile, build_grid(L, 40))
    return make


@pytest.fixture(scope="session")
def analysis(profile20, kernel):
    cache = {}

    def get(L, bc="dirichlet"):
        key = (float(L), bc)
        if key not in cache:
            cache[key] = analyze(restrict_to(profile20, build_grid(L, 40)), kernel, bc)
        return cache[key]
    return get


@pytest.fixture(scope="session")
def ref_rows():
    return run_scan(ScanConfig(L_list=list(REF_L), inv_h=40))


@pytest.fixture(scope="session")
def neumann_rows():
    return run_scan(ScanConfig(L_list=list(REF_L), inv_h=40, bc="neumann", chain=False))


@pytest.fixture(scope="session")
def rows_20():
    return run_scan(ScanConfig(L_list=list(REF_L), inv_h=20, chain=False))


@pytest.fixture(scope="session")
def rows_80():
    return run_scan(ScanConfig(L_list=list(REF_L), inv_h=80, chain=False))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
