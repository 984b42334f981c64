import pytest

# criterion number -> one-line verdict, filled in by test_acceptance.py
ACCEPTANCE_REPORT = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_REPORT:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_REPORT):
        terminalreporter.write_line(ACCEPTANCE_REPORT[key])


@pytest.fixture
def record_criterion():
    def record(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
        ACCEPTANCE_REPORT[number] = line
        print(line)
        return ok

    return record
