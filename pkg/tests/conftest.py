"""Collects acceptance outcomes and prints one line per criterion."""

import pytest

CRITERIA = {
    1: "operator algebra (homogeneity, subadditivity, aperture/bank monotonicity, translation)",
    2: "weak Morrey norm <= strong Morrey norm on every corpus instance",
    3: "CZ decomposition on 50 seeded (f, sigma) pairs",
    4: "weights: constant weight, |x|^-1/2 A_1 constant, tail ratio, Mw <= [w]_A1 w",
    5: "INEQ6 g* <= shell bound, zero violations",
    6: "theorem ratios finite, drift <= 25% under N and bank doubling",
    7: "L4.1 spread across j = 1..4 within 2x on the default corpus",
    8: "byte-identical reports and thread-count independence",
}

_outcomes: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(k): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (rep.when != "call" and rep.passed):
        return
    k = mark.args[0]
    ok = rep.passed
    prev = _outcomes.get(k, (True, []))
    failed = prev[1] + ([item.name] if not ok else [])
    _outcomes[k] = (prev[0] and ok, failed)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for k, text in CRITERIA.items():
        if k not in _outcomes:
            continue
        ok, failed = _outcomes[k]
        line = f"ACCEPTANCE criterion {k}: {'PASS' if ok else 'FAIL'}  {text}"
        if failed:
            line += f"  (failed: {', '.join(failed)})"
        tr.write_line(line)
