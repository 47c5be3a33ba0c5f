import numpy as np
import pytest

from incompat.operators import DensityMatrix, Observable, PauliString, pauli_operator
from incompat.presets import example1, example2, random_pair


# --- Observables ---
@pytest.fixture(scope="session")
def example1_pair():
    """(X1X2, (Z1+Z2)/2)."""
    return example1()


@pytest.fixture(scope="session")
def example2_pair():
    return example2()


@pytest.fixture(scope="session")
def z_pair():
    """(Z1, Z2) on two qubits."""
    return (
        Observable.from_paulis({"ZI": 1.0}, label="Z1"),
        Observable.from_paulis({"IZ": 1.0}, label="Z2"),
    )


@pytest.fixture(scope="session")
def random_pairs():
    """Ten seeded GUE-normalized pairs."""
    return [random_pair(seed) for seed in range(10)]


# --- States ---
@pytest.fixture(scope="session")
def mixed_state():
    return DensityMatrix.maximally_mixed(2)


@pytest.fixture(scope="session")
def ground_state():
    return DensityMatrix.basis("00")


@pytest.fixture
def pauli():
    """Dense matrix of a Pauli string given by its letters."""

    def build(letters: str) -> np.ndarray:
        return pauli_operator(PauliString(letters))

    return build
