import re

import pytest

from kn_fermion.curve_models import make_elliptic_curve, make_rational_curve

# criterion number -> (passed, detail); filled by the acceptance tests
ACCEPTANCE_RESULTS: dict = {}
_DETAILS: dict = {}
_CRITERION = re.compile(r"test_criterion_(\d+)")


@pytest.fixture(scope="session")
def rational():
    return make_rational_curve()


@pytest.fixture(scope="session")
def torus():
    # generic periods and marked points (no torsion relation between P+ and P-)
    return make_elliptic_curve(1, 0.23 + 1.07j, 0.137 + 0.291j, -0.2 - 0.31j)


@pytest.fixture
def note(request):
    """``note(text)`` attaches a short detail to the current criterion's summary line."""
    k = int(_CRITERION.match(request.node.name).group(1))

    def _note(text):
        _DETAILS.setdefault(k, []).append(str(text))
    return _note


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    m = _CRITERION.match(item.name)
    if m and (rep.when == "call" or rep.failed):
        k = int(m.group(1))
        prev = ACCEPTANCE_RESULTS.get(k, (True, ""))[0]
        ACCEPTANCE_RESULTS[k] = (prev and rep.passed, "; ".join(_DETAILS.get(k, [])))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in range(1, 10):
        if k not in ACCEPTANCE_RESULTS:
            terminalreporter.write_line(f"criterion {k}: NOT RUN")
            continue
        ok, detail = ACCEPTANCE_RESULTS[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
