"""Acceptance bookkeeping: each criterion records one verdict, printed after the run."""

import pytest

N_CRITERIA = 9
_verdicts: dict[int, tuple[bool, str]] = {}


def record(number: int, ok: bool, detail: str) -> None:
    """Store the verdict of an acceptance criterion and fail the calling test if it is negative."""
    _verdicts[number] = (bool(ok), detail)
    assert ok, f"criterion {number}: {detail}"


@pytest.fixture
def criterion():
    return record


def pytest_terminal_summary(terminalreporter):
    ran = [n for n in range(1, N_CRITERIA + 1) if n in _verdicts]
    if not ran:
        return
    terminalreporter.section("acceptance criteria")
    for n in range(1, N_CRITERIA + 1):
        if n in _verdicts:
            ok, detail = _verdicts[n]
            terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
        else:
            terminalreporter.write_line(f"criterion {n}: NOT EVALUATED")
