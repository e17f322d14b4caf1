"""Shared, session-scoped search results (each search runs once per test session).

Wall-clock seconds of each search are kept in ``TIMINGS`` for the runtime
criteria.
"""

import sys
import time

import pytest

from ring_dynamics.search import (find_far_orbit, find_near_orbit, find_spiral,
                                  search_eight_family)

TIMINGS: dict = {}


def _timed(key, fn, *args, **kwargs):
    start = time.perf_counter()
    out = fn(*args, **kwargs)
    TIMINGS[key] = time.perf_counter() - start
    return out


@pytest.fixture(scope="session")
def timings():
    return TIMINGS


@pytest.fixture(scope="session")
def far_orbits():
    return {eps: _timed(("far", eps), find_far_orbit, eps) for eps in (0.1, 0.05)}


@pytest.fixture(scope="session")
def near_orbits():
    return {eps: _timed(("near", eps), find_near_orbit, eps) for eps in (0.05, 0.025)}


@pytest.fixture(scope="session")
def ring_eights():
    return [_timed(("eight", m), search_eight_family, m, "ring") for m in range(3)]


@pytest.fixture(scope="session")
def euler_eights():
    return [_timed(("euler-eight", m), search_eight_family, m, "euler") for m in range(3)]


@pytest.fixture(scope="session")
def spiral():
    return _timed("spiral", find_spiral, 0.3)


@pytest.fixture(scope="session")
def spiral_offset():
    return _timed("spiral-offset", find_spiral, 0.3, offset=1e-3)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "ACCEPTANCE", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
