from __future__ import annotations

import functools

import pytest

from qmds_lab.qmds import make_code

GRID = [(5, 4, 2), (5, 4, 3), (5, 5, 3), (7, 6, 3), (7, 6, 4), (7, 7, 4)]
SMALL_GRID = [(5, 4, 2), (5, 4, 3), (5, 5, 3)]

# criterion id -> (passed, detail); filled by tests/test_acceptance.py
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


@functools.lru_cache(maxsize=None)
def grid_code(q: int, n: int, t: int):
    return make_code(q, n, t)


@pytest.fixture
def code551():
    return grid_code(5, 5, 3)


@pytest.fixture
def code542():
    return grid_code(5, 4, 2)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{key}: {'PASS' if ok else 'FAIL'}  {detail}")
