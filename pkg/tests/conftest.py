import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from dpje.polytope import Polytope

settings.register_profile(
    "default", max_examples=40, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def gaussian_polytope(n, d, seed):
    return Polytope(np.random.default_rng(seed).standard_normal((n, d)))


@pytest.fixture
def small_polytope():
    return gaussian_polytope(30, 4, 7)


@pytest.fixture
def tmp_matrix(tmp_path):
    path = tmp_path / "A.txt"
    path.write_text("# box with a diagonal face\n1 0\n0 1\n1 1\n", encoding="utf-8")
    return path


# one line per acceptance criterion, printed after the test session
ACCEPTANCE_LINES = []


def record(criterion, ok, detail):
    line = f"criterion {criterion:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line, flush=True)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
