import pytest

from nlof.netsim import DESK_HOSTS, ScenarioSpec, desk_topology, generate_scenario


@pytest.fixture(scope="session")
def null_scenario():
    spec = ScenarioSpec(desk_topology(), 5000, [1e5, 1e6], host_nodes=DESK_HOSTS, jitter=0.02, seed=7)
    return generate_scenario(spec)


@pytest.fixture(scope="session")
def single_fault_scenario():
    topo = desk_topology(error_rates={("h1", "S1"): 0.1})
    spec = ScenarioSpec(topo, 5000, [1e5, 1e6], host_nodes=DESK_HOSTS, jitter=0.02, seed=3)
    return generate_scenario(spec)


ACCEPTANCE_LOG: list[str] = []


@pytest.fixture
def criterion():
    """Record one PASS/FAIL line per acceptance criterion."""

    def record(name: str, ok: bool, detail: str = ""):
        ACCEPTANCE_LOG.append(f"{name:<4} {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, f"{name}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LOG:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LOG:
            terminalreporter.write_line(line)
