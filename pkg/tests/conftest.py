from __future__ import annotations

import numpy as np
import pytest

from tubelaunch.runner import run
from tubelaunch.scenario import Scenario, builtin_scenario, load_scenario


@pytest.fixture(scope="session")
def nominal():
    return load_scenario(builtin_scenario("nominal"))


@pytest.fixture(scope="session")
def nominal_run(nominal):
    return run(nominal)


@pytest.fixture
def scenario():
    return Scenario()


def quat_from_tilt(axis, angle):
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    return np.concatenate([[np.cos(angle / 2)], np.sin(angle / 2) * axis])


CRITERIA: list[str] = []


@pytest.fixture
def criterion():
    """Record a PASS/FAIL line for the acceptance summary, then assert."""

    def check(label: str, ok: bool, detail: str = "") -> None:
        CRITERIA.append(f"{'PASS' if ok else 'FAIL'} {label}" + (f"  ({detail})" if detail else ""))
        print(CRITERIA[-1])
        assert ok, f"{label}: {detail}"

    return check


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in CRITERIA:
            terminalreporter.write_line(line)
