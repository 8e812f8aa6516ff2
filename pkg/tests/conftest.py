import pytest

from freqbar.compiler import GAUSSIAN_3X3, compile_kernel
from freqbar.device import default_table


@pytest.fixture(scope="session")
def table():
    return default_table()


@pytest.fixture(scope="session")
def gaussian(table):
    return compile_kernel(GAUSSIAN_3X3, table)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
