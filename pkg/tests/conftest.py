from __future__ import annotations

import math

import pytest

from floquet_maser.core import ExperimentConfig


@pytest.fixture
def free_precession():
    """Undamped, undriven precession of a fully polarized, tipped spin."""
    return ExperimentConfig(t1=math.inf, t2=math.inf, gamma_se=0.0, chi=0.0, p0=1.0,
                            theta0=math.pi / 3, duration=2.0, sample_rate=100.0)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def report():
    """Record one pass/fail line for an acceptance criterion."""
    def _report(number: int, title: str, ok: bool, detail: str) -> bool:
        line = f"[{'PASS' if ok else 'FAIL'}] C{number:02d} {title}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return _report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
