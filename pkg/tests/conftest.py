import contextlib
import time

import pytest

ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def criterion():
    """Context manager recording one pass/fail line per acceptance criterion."""

    @contextlib.contextmanager
    def record(number: int, title: str):
        detail: dict = {}
        start = time.perf_counter()
        try:
            yield detail
        except BaseException:
            ACCEPTANCE[number] = _line("FAIL", number, title, detail, start)
            print(ACCEPTANCE[number])
            raise
        ACCEPTANCE[number] = _line("PASS", number, title, detail, start)
        print(ACCEPTANCE[number])

    return record


def _line(status, number, title, detail, start):
    info = ", ".join(f"{k}={v}" for k, v in detail.items())
    return f"[{status}] criterion {number}: {title} ({info}; {time.perf_counter() - start:.2f}s)"


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
