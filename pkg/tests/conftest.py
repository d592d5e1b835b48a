import numpy as np
import pytest

from extinction_lab.core import Interval, build_mesh, validate_params
from extinction_lab.pipeline import stationary_profile
from extinction_lab.spectrum import assemble_pencil, solve_eigens


@pytest.fixture(scope="session")
def p2():
    return validate_params(0.5, 1)


@pytest.fixture(scope="session")
def mesh400():
    return build_mesh(Interval(0.0, 1.0), 400)


@pytest.fixture(scope="session")
def profile400(mesh400, p2):
    return stationary_profile(mesh400, p2)


@pytest.fixture(scope="session")
def dec400(profile400, p2):
    return solve_eigens(assemble_pencil(profile400, p2), 10)


@pytest.fixture(scope="session")
def mesh100():
    return build_mesh(Interval(0.0, 1.0), 100)


@pytest.fixture(scope="session")
def profile100(mesh100, p2):
    return stationary_profile(mesh100, p2)


@pytest.fixture(scope="session")
def dec100(profile100, p2):
    return solve_eigens(assemble_pencil(profile100, p2), 12)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance bookkeeping: one PASS/FAIL line per criterion in the terminal summary

CRITERIA = pytest.StashKey()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")
    config.stash[CRITERIA] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or not (rep.when == "call" or rep.failed):
        return
    if hasattr(rep, "wasxfail"):
        status = f"FAIL (expected: {rep.wasxfail})"
    else:
        status = "PASS" if rep.passed else "FAIL"
    detail = "; ".join(v for k, v in item.user_properties if k == "detail")
    item.config.stash[CRITERIA].setdefault(mark.args[0], []).append((status, detail))


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(CRITERIA, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        entries = results[n]
        fails = [s for s, _ in entries if s != "PASS"]
        status = fails[0] if fails else "PASS"
        detail = "; ".join(d for _, d in entries if d)
        terminalreporter.write_line(f"criterion {n:2d}: {status}" + (f"  [{detail}]" if detail else ""))
