import numpy as np
import pytest

from qsynth import plants
from qsynth.robustness import overbound_uncertainty
from qsynth.synthesis import synthesize


@pytest.fixture(scope="session")
def cavity():
    return plants.cavity_plant()


@pytest.fixture(scope="session")
def cavity_result(cavity):
    return synthesize(cavity, 0.1)


@pytest.fixture(scope="session")
def uncertain_cavity():
    return overbound_uncertainty(plants.cavity_plant(), 0.1, 1.5 * np.eye(2), 0.1)


@pytest.fixture(scope="session")
def uncertain_result(uncertain_cavity):
    return synthesize(uncertain_cavity, 0.1)


@pytest.fixture(scope="session")
def measured_cavity():
    return plants.measured_cavity_plant()


@pytest.fixture(scope="session")
def amplifier_cavity():
    return plants.amplifier_cavity_plant()


def random_stable(rng, n, margin=0.1):
    """Random real matrix shifted so every eigenvalue has real part <= -margin."""
    A = rng.standard_normal((n, n))
    top = np.max(np.linalg.eigvals(A).real)
    return A - (top + margin + rng.uniform(0, 1)) * np.eye(n)
