"""Acceptance bookkeeping: one PASS/FAIL line per criterion after the run."""

import pytest

CRITERIA = {
    1: "dcor and dcor_blocked match the naive oracle (100 instances, rel 1e-10)",
    2: "dcor properties: range, identity, symmetry, invariances, degenerate input",
    3: "finite-difference gradient checks for every layer kind (rel 1e-4)",
    4: "builtin decoder tables reproduce their per-row shape chains",
    5: "constant latents give IOB within [0.8, 1.2]",
    6: "scenario orderings on the N=5000 analog",
    7: "two single-threaded scenario runs give byte-identical reports",
    8: "CSTD round-trip of 1000 tensors and corrupted-header offsets",
    9: "pearson identities and a symmetric unit-diagonal cross-metric matrix",
}

_outcomes = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_runtest_logreport(report):
    n = getattr(report, "criterion", None)
    if n is None:
        return
    failed = report.failed or (report.when == "call" and report.skipped)
    state = _outcomes.setdefault(n, {"ran": False, "failed": False})
    state["failed"] |= failed
    state["ran"] |= report.when == "call"


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        outcome.get_result().criterion = marker.args[0]


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n, text in CRITERIA.items():
        state = _outcomes.get(n)
        if state is None:
            verdict = "NOT RUN"
        elif state["failed"] or not state["ran"]:
            verdict = "FAIL"
        else:
            verdict = "PASS"
        terminalreporter.write_line(f"criterion {n} {verdict}: {text}")
