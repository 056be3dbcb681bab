import pytest

_LINES: list[str] = []


def pytest_runtest_logreport(report):
    if report.when == "call":
        _LINES.extend(v for k, v in report.user_properties if k == "acceptance")


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def report_criterion(record_property):
    """Record and print one PASS/FAIL line for an acceptance criterion."""

    def _report(number: int, passed: bool, detail: str) -> None:
        line = f"{'PASS' if passed else 'FAIL'} {number}: {detail}"
        print(line)
        record_property("acceptance", line)
        assert passed, line

    return _report
