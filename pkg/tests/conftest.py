import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from qmemory.errors import Reducible
from qmemory.process import MachineDefinition, validate_machine, zoo_machine

settings.register_profile("default", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ZOO = {
    "golden-mean-3-2": {"p": 0.9},
    "nemo": {"p": 0.1, "q": 0.9},
    "perturbed-coin": {"q0": 0.3, "q1": 0.6},
    "fair-coin": {},
}


def random_definition(rng, max_states=5, alphabet=("0", "1")):
    """Random unifilar machine; retried until strongly connected."""
    while True:
        S = int(rng.integers(1, max_states + 1))
        states = [f"s{i}" for i in range(S)]
        edges = []
        for s in states:
            n_out = int(rng.integers(1, len(alphabet) + 1))
            symbols = rng.choice(len(alphabet), size=n_out, replace=False)
            probs = rng.dirichlet(np.ones(n_out))
            probs = np.clip(probs, 0.02, None)
            probs /= probs.sum()
            for x, p in zip(symbols, probs):
                edges.append((s, alphabet[x], states[int(rng.integers(S))], float(p)))
        defn = MachineDefinition("random", tuple(alphabet), tuple(states), tuple(edges))
        try:
            validate_machine(defn)
        except Reducible:
            continue
        return defn


@st.composite
def machine_definitions(draw, max_states=5):
    seed = draw(st.integers(0, 2**32 - 1))
    return random_definition(np.random.default_rng(seed), max_states)


@pytest.fixture(scope="session")
def zoo():
    return {name: zoo_machine(name, **params) for name, params in ZOO.items()}


@pytest.fixture(scope="session")
def golden():
    return zoo_machine("golden-mean-3-2", p=0.9)


@pytest.fixture(scope="session")
def nemo():
    return zoo_machine("nemo", p=0.1, q=0.9)


@pytest.fixture(scope="session")
def fair():
    return zoo_machine("fair-coin")


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
