import pytest

ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def record_criterion():
    """Store a one-line PASS/FAIL summary for an acceptance criterion."""

    def record(number: int, title: str, passed: bool, detail: str):
        ACCEPTANCE[number] = f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {title} -- {detail}"
        print(ACCEPTANCE[number])

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[number])
