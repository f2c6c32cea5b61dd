from fractions import Fraction

import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=40, deadline=None)
settings.load_profile("default")

F = Fraction


@pytest.fixture
def two_edge_net():
    from spillnash.network import Edge, Network

    return Network(
        ("s", "t"),
        (Edge("s", "t", F(1), F(1), F(1)), Edge("s", "t", F(2), F(2), F(2))),
        "s",
        "t",
        F(3),
    )


# one line per acceptance check, filled by test_acceptance and echoed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
