import pytest

# criterion id -> (passed, summary); filled by tests/test_acceptance.py
ACCEPTANCE: dict = {}


@pytest.fixture
def report():
    def _report(crit, passed, detail):
        ACCEPTANCE[crit] = (bool(passed), detail)
        return passed
    return _report


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(ACCEPTANCE, key=lambda c: (len(c), c)):
        passed, detail = ACCEPTANCE[crit]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] criterion {crit}: {detail}")
