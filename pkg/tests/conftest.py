import numpy as np
import pytest

from app.services import channels
from app.services.generator import InstanceGenerator

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
KET_PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def generator():
    return InstanceGenerator(seed=2024)


@pytest.fixture
def qubit_id():
    return channels.identity_channel(2)


@pytest.fixture
def qubit_z():
    return channels.unitary_channel(PAULI_Z)


@pytest.fixture
def uniform_qubit():
    return channels.uniform_channel(2, 2)
