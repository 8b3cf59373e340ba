import pytest

_LINES = []


@pytest.fixture
def verdict():
    """Record one acceptance line: verdict(ok, "C3", "detail")."""
    def record(ok, tag, detail):
        _LINES.append(f"{tag} {'PASS' if ok else 'FAIL'}  {detail}")
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_LINES, key=lambda s: int(s.split()[0][1:])):
            terminalreporter.write_line(line)
