import pytest

_ACCEPTANCE: list[tuple[str, bool | None, str]] = []


def _verdict(passed: bool | None) -> str:
    return "SKIP" if passed is None else "PASS" if passed else "FAIL"


@pytest.fixture
def report():
    """Record one acceptance verdict; printed as a single line at the end of the session."""

    def record(criterion: str, passed: bool | None, detail: str) -> bool | None:
        _ACCEPTANCE.append((criterion, passed, detail))
        print(f"{_verdict(passed)} {criterion}: {detail}")
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, passed, detail in sorted(_ACCEPTANCE, key=lambda r: int(r[0].split()[1].rstrip(":"))):
        terminalreporter.write_line(f"{_verdict(passed)} {criterion}: {detail}")
