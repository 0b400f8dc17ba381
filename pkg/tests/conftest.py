import pytest

_LINES: list[str] = []


@pytest.fixture
def acceptance_log():
    """Record a one-line verdict that is echoed in the terminal summary."""
    def record(number: int, ok: bool, detail: str) -> None:
        _LINES.append(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_LINES):
            terminalreporter.write_line(line)
