"""Shared test configuration.

Acceptance checks record their outcome through the ``acceptance`` fixture; the
terminal summary then prints one PASS/FAIL line per criterion.
"""
import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "repo",
    max_examples=40,
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "repo"))

_ACCEPTANCE: dict = {}


@pytest.fixture
def acceptance():
    """``acceptance(number, title, passed, detail)`` records one criterion."""

    def record(number: int, title: str, passed: bool, detail: str = ""):
        _ACCEPTANCE[number] = (title, bool(passed), detail)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, passed, detail = _ACCEPTANCE[number]
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] {number:2d}. {title}: {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
