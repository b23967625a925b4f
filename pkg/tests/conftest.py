import pytest

from ktacnode.painleve import hm_table

# one line per acceptance criterion, filled by test_acceptance.py
ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def hm0():
    return hm_table(0.0)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
