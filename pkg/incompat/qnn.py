"""
Mixed-unitary channel E(rho) = sum_i w_i U_i rho U_i^dagger realized by an
ancilla-controlled unitary, with softmax weights and Pauli-generator unitaries.
"""

import logging
from collections.abc import Sequence
from typing import Any, Self

import numpy as np
from pydantic import BaseModel, ConfigDict, PrivateAttr, field_validator
from scipy.special import softmax

from incompat.errors import DimensionMismatch, EmptyDataset
from incompat.model import RecordModel
from incompat.operators import (
    DATASET_STREAM,
    DensityMatrix,
    Observable,
    PauliString,
    as_matrix,
    expectation,
    haar_vector,
    make_rng,
    pauli_operator,
    pauli_stack,
)

logger = logging.getLogger(__name__)

UNITARITY_TOL = 1e-10


def generator_count(n: int) -> int:
    return 4**n - 1


def _qubits_for_generators(count: int) -> int:
    n = 1
    while generator_count(n) < count:
        n += 1
    if generator_count(n) != count:
        raise DimensionMismatch(f"{count} generator parameters do not match any 4^n - 1")
    return n


def unitaries_from_params(thetas: np.ndarray, n: int) -> np.ndarray:
    """Batch of U = exp(-i sum_k theta_k P_k) over the non-identity Paulis; `thetas` has shape (..., 4^n - 1)."""
    thetas = np.asarray(thetas, dtype=float)
    generators = pauli_stack(n)[1:]
    hamiltonians = np.einsum("...k,kab->...ab", thetas, generators)
    values, vectors = np.linalg.eigh(hamiltonians)
    phases = np.exp(-1j * values)
    return np.einsum("...ak,...k,...bk->...ab", vectors, phases, vectors.conj())


def unitary_from_params(theta: Sequence[float] | np.ndarray, n: int | None = None) -> np.ndarray:
    """U = exp(-iH), H = sum_k theta_k P_k over all non-identity Pauli strings."""
    theta = np.asarray(theta, dtype=float)
    if n is None:
        n = _qubits_for_generators(theta.size)
    if theta.shape != (generator_count(n),):
        raise DimensionMismatch(f"expected {generator_count(n)} parameters for n={n}, got {theta.shape}")
    return unitaries_from_params(theta, n)


class MixedUnitaryChannel(BaseModel):
    """Weights are softmax(weight_logits); unitaries are built from generator_params rows."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    n: int
    d_a: int
    weight_logits: np.ndarray
    generator_params: np.ndarray

    _weights: np.ndarray = PrivateAttr()
    _unitaries: np.ndarray = PrivateAttr()

    @field_validator("weight_logits", "generator_params", mode="before")
    @classmethod
    def coerce_params(cls, value: Any) -> np.ndarray:
        array = np.array(value, dtype=float)
        array.setflags(write=False)
        return array

    def check_shapes(self) -> None:
        if self.weight_logits.shape != (self.d_a,):
            raise DimensionMismatch(f"weight_logits shape {self.weight_logits.shape} != ({self.d_a},)")
        expected = (self.d_a, generator_count(self.n))
        if self.generator_params.shape != expected:
            raise DimensionMismatch(f"generator_params shape {self.generator_params.shape} != {expected}")

    def model_post_init(self, context: Any, /) -> None:
        self.check_shapes()
        self._weights = softmax(self.weight_logits)
        self._unitaries = unitaries_from_params(self.generator_params, self.n)

    @classmethod
    def identity(cls, n: int, d_a: int) -> Self:
        return cls(n=n, d_a=d_a, weight_logits=np.zeros(d_a), generator_params=np.zeros((d_a, generator_count(n))))

    @classmethod
    def random(cls, n: int, d_a: int, rng: np.random.Generator, scale: float = 0.1) -> Self:
        return cls(
            n=n,
            d_a=d_a,
            weight_logits=np.zeros(d_a),
            generator_params=scale * rng.standard_normal((d_a, generator_count(n))),
        )

    @property
    def weights(self) -> np.ndarray:
        return self._weights

    @property
    def unitaries(self) -> np.ndarray:
        return self._unitaries

    @property
    def dim(self) -> int:
        return 2**self.n

    def unitarity_error(self) -> float:
        identity = np.eye(self.dim)
        products = np.einsum("iba,ibc->iac", self._unitaries.conj(), self._unitaries)
        return float(np.max(np.linalg.norm(products - identity, axis=(1, 2))))

    def apply(self, rho: DensityMatrix | np.ndarray) -> np.ndarray:
        r = as_matrix(rho)
        if r.shape != (self.dim, self.dim):
            raise DimensionMismatch(f"state dim {r.shape} != {self.dim}")
        out = np.einsum("i,iab,bc,idc->ad", self._weights, self._unitaries, r, self._unitaries.conj(), optimize=True)
        return 0.5 * (out + out.conj().T)

    def adjoint(self, operator: Any) -> np.ndarray:
        a = as_matrix(operator)
        if a.shape != (self.dim, self.dim):
            raise DimensionMismatch(f"operator dim {a.shape} != {self.dim}")
        out = np.einsum("i,iba,bc,icd->ad", self._weights, self._unitaries.conj(), a, self._unitaries, optimize=True)
        return 0.5 * (out + out.conj().T)


def apply_channel(channel: MixedUnitaryChannel, rho: DensityMatrix | np.ndarray) -> DensityMatrix:
    """E(rho) = sum_i w_i U_i rho U_i^dagger."""
    return DensityMatrix.from_matrix(channel.apply(rho))


def adjoint_observable(channel: MixedUnitaryChannel, j: int) -> np.ndarray:
    """E^dagger(Z_j) = sum_i w_i U_i^dagger Z_j U_i for 1-based qubit j."""
    return channel.adjoint(pauli_operator(PauliString.z_on(j, channel.n)))


class LabeledState(RecordModel):
    rho: DensityMatrix
    target: float

    @field_validator("target")
    @classmethod
    def check_target(cls, value: float) -> float:
        if abs(value) > 1 + 1e-9:
            raise ValueError(f"|target| must be <= 1, got {value}")
        return value


def generate_dataset(observable: Observable, size: int, seed: int, *stream: int) -> list[LabeledState]:
    """Haar-random pure states labeled with tr(rho O); deterministic per (seed, *stream)."""
    if size < 1:
        raise EmptyDataset(f"dataset size must be >= 1, got {size}")
    rng = make_rng(seed, DATASET_STREAM, *stream)
    data = []
    for _ in range(size):
        psi = haar_vector(rng, observable.dim)
        rho = DensityMatrix(n=observable.n, matrix=np.outer(psi, psi.conj()))
        data.append(LabeledState(rho=rho, target=expectation(rho, observable)))
    return data


def stack_dataset(data: Sequence[LabeledState]) -> tuple[np.ndarray, np.ndarray]:
    """(states of shape (L, d, d), targets of shape (L,))."""
    if not data:
        raise EmptyDataset("dataset is empty")
    return np.stack([item.rho.matrix for item in data]), np.array([item.target for item in data])


def loss(
    channel: MixedUnitaryChannel,
    alpha: float,
    data1: Sequence[LabeledState],
    data2: Sequence[LabeledState],
) -> tuple[float, float]:
    """
    Returns (L, L_O) with
    L_O = mean_l [alpha O_l - tr(Z_1 E(rho_l))]^2 + mean_m [alpha O_m - tr(Z_2 E(rho_m))]^2
    and L = L_O - alpha.
    """
    if not data1 or not data2:
        raise EmptyDataset("both datasets must be non-empty")
    total = 0.0
    for qubit, data in ((1, data1), (2, data2)):
        states, targets = stack_dataset(data)
        readout = adjoint_observable(channel, qubit)
        predictions = np.real(np.einsum("lab,ba->l", states, readout))
        total += float(np.mean((alpha * targets - predictions) ** 2))
    return total - alpha, total
