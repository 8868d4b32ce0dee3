import numpy as np
import pytest

from capa_secbeam.channel import Scenario
from capa_secbeam.gram import scenario_gram
from capa_secbeam.sim import ScenarioDefaults, sample_scenario


@pytest.fixture(scope="session")
def defaults():
    return ScenarioDefaults()


@pytest.fixture(scope="session")
def default_scenario(defaults):
    return sample_scenario(defaults, 12345)


@pytest.fixture(scope="session")
def default_gram(default_scenario):
    return scenario_gram(default_scenario)


@pytest.fixture(scope="session")
def single_user_scenario():
    return Scenario(
        aperture_side_x=0.5, aperture_side_y=0.5, frequency=2.4e9,
        lut_positions=[[1.0, -2.0, 20.0]], eve_positions=np.zeros((0, 3)),
        noise_powers_lut=5.6e-3, noise_powers_eve=[], weights=1.0, power_budget=10.0,
    )


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


def random_coeffs(rng, n, k, scale=1.0):
    return scale * (rng.standard_normal((n, k)) + 1j * rng.standard_normal((n, k)))


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
