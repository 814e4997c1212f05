import pytest

from fpge import Xoshiro256StarStar, parse_bnf

G0_TEXT = "<e> ::= <e>+<e> | <e>*<e> | x | y | 1\n"

# one line per acceptance criterion, echoed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def g0():
    return parse_bnf(G0_TEXT)


@pytest.fixture
def rng():
    return Xoshiro256StarStar(12345)
