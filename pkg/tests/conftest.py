from __future__ import annotations

import pytest
from helpers import cable, overhead

from quakeharden.network import Bus, EssentialLoad, Network, builtin_ieee33


@pytest.fixture(scope="session")
def ieee33() -> Network:
    return builtin_ieee33()


@pytest.fixture
def toy5() -> Network:
    """Five buses, five lines, one loop; two generators, one essential load."""
    buses = (
        Bus(1, gen_capacity=60.0),
        Bus(2, common_load=20.0),
        Bus(3, common_load=15.0),
        Bus(4, gen_capacity=30.0),
        Bus(5, common_load=10.0),
    )
    lines = (
        overhead(1, 1, 2, p=0.3),
        overhead(2, 2, 3, p=0.5),
        cable(3, 3, 4, p=0.2),
        overhead(4, 4, 5, p=0.6),
        overhead(5, 5, 1, p=0.4),
    )
    return Network(buses, lines, (EssentialLoad("E1", 3, 25.0, 1000.0),))


def pytest_terminal_summary(terminalreporter):
    from helpers import ACCEPTANCE
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
