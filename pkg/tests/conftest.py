import pytest

_ACCEPTANCE: dict[str, str] = {}


@pytest.fixture
def record():
    """Record one summary line per acceptance criterion: ``record(tag, ok, detail)``."""

    def _record(tag: str, ok: bool, detail: str) -> bool:
        line = f"{tag} {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE[tag] = line
        print(line)
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for tag in sorted(_ACCEPTANCE, key=lambda t: int(t.strip("AC[]"))):
        terminalreporter.write_line(_ACCEPTANCE[tag])
