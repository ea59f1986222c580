import numpy as np
import pytest

from idncsim import ChannelModel, PacketUniverse, make_scenario

# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE_LINES = []


def pkts(*labels):
    """Packet ids from 1-based labels: pkts(2, 3) == {p2, p3}."""
    return frozenset(k - 1 for k in labels)


def exchange_scenario(eps=0.0, importance=None):
    """Three devices A, B, C over p1..p4: A has p2,p3,p4; B has p1,p3,p4; C has p1,p2."""
    imp = np.ones((4, 3)) if importance is None else importance
    return make_scenario(PacketUniverse.create(imp), ChannelModel.uniform(3, d2d=eps),
                         [pkts(2, 3, 4), pkts(1, 3, 4), pkts(1, 2)])


@pytest.fixture
def exchange():
    return exchange_scenario()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
