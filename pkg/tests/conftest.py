import pytest

ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    """Call as ``criterion(n, ok, detail)``; records one PASS/FAIL line and asserts."""

    def record(number, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    def skip(number, reason):
        ACCEPTANCE_LINES.append(f"SKIP criterion {number}: {reason}")
        pytest.skip(reason)

    record.skip = skip
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
