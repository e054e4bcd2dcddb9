import pytest

ACCEPTANCE = {}


@pytest.fixture
def acceptance_record():
    def record(number, title, ok, detail=""):
        ACCEPTANCE[number] = (title, bool(ok), detail)
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {k:2d} {title}: {detail}")
