"""Shared fixtures and hypothesis profile."""
from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=60, deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240601)


@pytest.fixture
def hand_matrix() -> np.ndarray:
    """Four equally likely profit/loss scenarios for two assets."""
    return np.array([[-3.0, -2.0], [-1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])


ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture
def record():
    """Store the one-line verdict of an acceptance criterion for the summary."""

    def _record(criterion: int, passed: bool, detail: str) -> None:
        ACCEPTANCE_LINES[criterion] = f"criterion {criterion:2d}: {'PASS' if passed else 'FAIL'}  {detail}"
        print(ACCEPTANCE_LINES[criterion])

    return _record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
