import pytest

# Filled by tests/test_acceptance.py: criterion number -> (passed, detail).
ACCEPTANCE: dict = {}


@pytest.fixture
def record_acceptance():
    def record(n: int, passed: bool, detail: str) -> None:
        ACCEPTANCE[n] = (bool(passed), detail)
        print(f"{'PASS' if passed else 'FAIL'} criterion {n}: {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {n}: {detail}")
