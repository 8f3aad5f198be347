import pytest

_LINES: list[str] = []


class AcceptanceLog:
    """Collects one PASS/FAIL line per acceptance criterion for the terminal summary."""

    def record(self, name: str, ok: bool, detail: str = "") -> bool:
        line = f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  [{detail}]" if detail else "")
        _LINES.append(line)
        print(line)
        return ok

    def info(self, name: str, detail: str) -> None:
        line = f"INFO  {name}  [{detail}]"
        _LINES.append(line)
        print(line)


@pytest.fixture(scope="session")
def acceptance():
    return AcceptanceLog()


def pytest_terminal_summary(terminalreporter):
    if _LINES:
        terminalreporter.section("acceptance criteria")
        for line in _LINES:
            terminalreporter.write_line(line)
