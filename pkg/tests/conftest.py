"""Collects one verdict line per acceptance criterion and prints them after the run."""
import pytest

_LINES: list[tuple[str, str]] = []


@pytest.fixture
def verdict():
    def record(criterion: str, ok: bool, detail: str) -> bool:
        _LINES.append((criterion, f"{'PASS' if ok else 'FAIL'}  {criterion:<4} {detail}"))
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not _LINES:
        return
    terminalreporter.section("acceptance criteria")
    key = lambda item: (int(item[0][1:]), item[1])
    for _, line in sorted(_LINES, key=key):
        terminalreporter.write_line(line)
