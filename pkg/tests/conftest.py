from __future__ import annotations

import os

import pytest

from sievegaps.gapcycle import base_cycle, extend
from sievegaps.numtheory import previous_prime

STRETCH = os.environ.get("SIEVEGAPS_STRETCH") == "1"

_ACCEPTANCE: list[tuple[str, str, str]] = []


class PrimorialCache:
    def __init__(self) -> None:
        self._cycles = {}

    def __call__(self, p: int):
        if p not in self._cycles:
            self._cycles[p] = base_cycle(2) if p == 2 else extend(self(previous_prime(p)), p)
        return self._cycles[p]


@pytest.fixture(scope="session")
def primorial():
    return PrimorialCache()


def pytest_collection_modifyitems(config, items):
    if STRETCH:
        return
    skip = pytest.mark.skip(reason="stretch run; set SIEVEGAPS_STRETCH=1")
    for item in items:
        if "stretch" in item.keywords:
            item.add_marker(skip)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    label = marker.args[0]
    if rep.when == "call":
        status = "PASS" if rep.passed else "FAIL"
        _ACCEPTANCE.append((label, status, item.name))
    elif rep.when == "setup" and rep.skipped:
        _ACCEPTANCE.append((label, "SKIP", item.name))


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label): acceptance criterion covered by the test")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, status, name in _ACCEPTANCE:
        terminalreporter.write_line(f"{status} {label} [{name}]")
