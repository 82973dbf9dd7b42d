import pytest

from core.coverage import build


@pytest.fixture(scope="session")
def graphs():
    """Coverage graphs for n = 1..6, built once per test session."""
    built = {}

    def get(n):
        if n not in built:
            built[n] = build(n)
        return built[n]

    return get


@pytest.fixture(scope="session")
def g3(graphs):
    return graphs(3)


@pytest.fixture(scope="session")
def g4(graphs):
    return graphs(4)
