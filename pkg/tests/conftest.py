import time

import numpy as np
import pytest

from evfp import scenarios
from evfp.dynamics import simulate

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
        terminalreporter.write_line(line)


@pytest.fixture
def report():
    """Record one pass/fail line per acceptance criterion (printed in the summary)."""

    def _report(number: int, ok: bool, detail: str):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)

    return _report


def timed_run(init, p):
    """simulate() with the wall time attached to the record as ``elapsed``."""
    start = time.perf_counter()
    rec = simulate(init, p)
    rec.elapsed = time.perf_counter() - start
    return rec


@pytest.fixture(scope="session")
def vacuum_record():
    return timed_run(*scenarios.vacuum(t_end=5.0))


@pytest.fixture(scope="session")
def blowup_record():
    return timed_run(*scenarios.blowup(n_cells=400))


@pytest.fixture(scope="session")
def global_record():
    return timed_run(*scenarios.global_run(n_cells=400, t_end=60.0))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
