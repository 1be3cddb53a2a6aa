"""Shared fixtures.  Acceptance outcomes are collected here and printed as
one line per criterion at the end of the session."""

import pytest

_ACCEPTANCE = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE] = {}


@pytest.fixture
def record(request):
    """record(criterion, status, detail) with status PASS, FAIL or WARN."""
    store = request.config.stash[_ACCEPTANCE]

    def _record(criterion, status: str, detail: str) -> None:
        store[criterion] = (status, detail)

    return _record


def pytest_terminal_summary(terminalreporter, config):
    store = config.stash.get(_ACCEPTANCE, {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(store, key=str):
        status, detail = store[k]
        terminalreporter.write_line(f"criterion {k}: {status:4s} {detail}")
