import pytest

ACCEPTANCE_RESULTS: dict = {}


@pytest.fixture
def record():
    """Store a one-line acceptance verdict; the summary hook prints them all."""
    def _record(label, ok, detail=""):
        ACCEPTANCE_RESULTS[label] = (bool(ok), detail)
        return ok
    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance")
    for label in sorted(ACCEPTANCE_RESULTS, key=lambda s: int(s.split("-")[1].rstrip("]"))):
        ok, detail = ACCEPTANCE_RESULTS[label]
        terminalreporter.write_line(f"{label} {'PASS' if ok else 'FAIL'} {detail}".rstrip())
