import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def within_binomial(count, trials, p, k=3.0):
    se = np.sqrt(p * (1 - p) / trials)
    return abs(count / trials - p) <= k * se


ACCEPTANCE_LINES = []


def record(criterion, ok, detail):
    """Log one acceptance line; the summary is printed at the end of the run."""
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}")
    print(ACCEPTANCE_LINES[-1])
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
