"""
Pauli-string algebra, dense Hermitian linear algebra and seeded generation of
random observables and Haar-random pure states.

Qubit 1 is the first letter of a Pauli string and the most significant digit of
both the base-4 Pauli index and the computational-basis index.
"""

import logging
from collections.abc import Iterator, Mapping
from functools import cache, reduce
from typing import Any, Self

import numpy as np
import scipy.linalg
from pydantic import BaseModel, ConfigDict, field_validator, model_validator

from incompat.errors import DimensionMismatch, InvalidObservable, InvalidState, NotHermitian
from incompat.mixins import MatrixMixin

logger = logging.getLogger(__name__)

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
NORM_TOL = 1e-9
STATE_TOL = 1e-10

PAULI_LETTERS = "IXYZ"

_SINGLE_QUBIT = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# Independent random streams for draws sharing one integer seed.
OBSERVABLE_STREAM = 0x0B5
STATE_STREAM = 0x57A
DATASET_STREAM = 0xDA7
SAMPLING_STREAM = 0x5A3
TRAINING_STREAM = 0x7A1


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    """Counter-based Philox generator keyed by ``(seed, *keys)``; all entries must be >= 0."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), *map(int, keys)])))


class PauliString(BaseModel):
    """
    Tensor product of single-qubit Paulis, e.g. ``PauliString("XZ")`` is X on qubit 1 and Z on qubit 2.
    """

    model_config = ConfigDict(frozen=True)

    letters: str

    def __init__(self, letters: str | None = None, /, **data: Any):
        if letters is not None:
            data["letters"] = letters
        super().__init__(**data)

    @field_validator("letters")
    @classmethod
    def check_letters(cls, value: str) -> str:
        value = value.upper()
        if not value or any(letter not in PAULI_LETTERS for letter in value):
            raise ValueError(f"Pauli letters must be a non-empty string over IXYZ, got {value!r}")
        return value

    @property
    def n(self) -> int:
        return len(self.letters)

    @property
    def index(self) -> int:
        index = 0
        for letter in self.letters:
            index = 4 * index + PAULI_LETTERS.index(letter)
        return index

    @classmethod
    def from_index(cls, index: int, n: int) -> Self:
        if not 0 <= index < 4**n:
            raise DimensionMismatch(f"Pauli index {index} out of range for n={n}")
        letters = []
        for _ in range(n):
            index, digit = divmod(index, 4)
            letters.append(PAULI_LETTERS[digit])
        return cls("".join(reversed(letters)))

    @classmethod
    def identity(cls, n: int) -> Self:
        return cls("I" * n)

    @classmethod
    def z_on(cls, qubit: int, n: int) -> Self:
        """Z on `qubit` (1-based), identity elsewhere."""
        if not 1 <= qubit <= n:
            raise DimensionMismatch(f"qubit {qubit} out of range for n={n}")
        return cls("I" * (qubit - 1) + "Z" + "I" * (n - qubit))

    @property
    def is_identity(self) -> bool:
        return set(self.letters) == {"I"}

    @property
    def is_diagonal(self) -> bool:
        return set(self.letters) <= {"I", "Z"}

    def matrix(self) -> np.ndarray:
        return pauli_operator(self)

    def __str__(self) -> str:
        return self.letters


def all_pauli_strings(n: int) -> Iterator[PauliString]:
    for index in range(4**n):
        yield PauliString.from_index(index, n)


@cache
def _pauli_matrix(letters: str) -> np.ndarray:
    matrix = reduce(np.kron, (_SINGLE_QUBIT[letter] for letter in letters))
    matrix.setflags(write=False)
    return matrix


def pauli_operator(p: PauliString | str) -> np.ndarray:
    """Dense 2^n x 2^n Kronecker product of single-qubit Paulis in qubit order (read-only)."""
    letters = p.letters if isinstance(p, PauliString) else PauliString(p).letters
    return _pauli_matrix(letters)


@cache
def pauli_stack(n: int) -> np.ndarray:
    """All 4^n Pauli matrices stacked in index order, shape (4^n, 2^n, 2^n)."""
    stack = np.stack([_pauli_matrix(p.letters) for p in all_pauli_strings(n)])
    stack.setflags(write=False)
    return stack


def pauli_coefficients(matrix: np.ndarray) -> np.ndarray:
    """Coefficients c_k = tr(M P_k) / 2^n of M in the Pauli basis, in index order."""
    matrix = as_square(matrix)
    n = qubits_for_dim(matrix.shape[0])
    return np.einsum("ab,kba->k", matrix, pauli_stack(n)) / matrix.shape[0]


def as_square(matrix: Any) -> np.ndarray:
    array = np.asarray(matrix, dtype=complex)
    if array.ndim != 2 or array.shape[0] != array.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {array.shape}")
    return array


def qubits_for_dim(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if n < 1 or 2**n != dim:
        raise DimensionMismatch(f"dimension {dim} is not a power of two >= 2")
    return n


class Spectrum(BaseModel):
    """Eigen-decomposition with `values` descending and `vectors` as aligned columns."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    values: np.ndarray
    vectors: np.ndarray

    @property
    def lambda_min(self) -> float:
        return float(self.values[-1])

    @property
    def lambda_max(self) -> float:
        return float(self.values[0])

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.values) @ self.vectors.conj().T

    def residuals(self, matrix: np.ndarray) -> np.ndarray:
        """Per-eigenpair residual norms ||A v_k - lambda_k v_k||."""
        matrix = as_square(matrix)
        return np.linalg.norm(matrix @ self.vectors - self.vectors * self.values, axis=0)


def _canonical_phase(vectors: np.ndarray) -> np.ndarray:
    """Rotate each column so its first non-negligible component is real positive."""
    magnitudes = np.abs(vectors)
    first = np.argmax(magnitudes > 1e-12 * magnitudes.max(axis=0, initial=0.0), axis=0)
    pivots = vectors[first, np.arange(vectors.shape[1])]
    phases = pivots / np.abs(pivots)
    return vectors / phases


def hermitian_eig(matrix: Any) -> Spectrum:
    """
    Eigen-decomposition of a Hermitian matrix.

    Args:
        matrix: square complex matrix, Hermitian within 1e-10 entrywise.

    Returns:
        Spectrum with descending eigenvalues and phase-fixed orthonormal eigenvectors.

    Raises:
        NotHermitian: if max |M - M^dagger| exceeds 1e-10.
    """
    m = as_square(matrix)
    error = float(np.max(np.abs(m - m.conj().T))) if m.size else 0.0
    if error > HERMITIAN_TOL:
        raise NotHermitian(f"max |M - M^dagger| = {error:.3e}")
    values, vectors = scipy.linalg.eigh(0.5 * (m + m.conj().T))
    values = np.ascontiguousarray(values[::-1])
    vectors = _canonical_phase(np.ascontiguousarray(vectors[:, ::-1]))
    return Spectrum(values=values, vectors=vectors)


def lambda_min(matrix: np.ndarray) -> float:
    """Smallest eigenvalue of a Hermitian matrix without validation (hot path of the solvers)."""
    return float(scipy.linalg.eigvalsh(matrix, subset_by_index=[0, 0])[0])


def partial_trace_left(matrix: Any, dim_left: int, dim_right: int) -> np.ndarray:
    """Trace out the left tensor factor of a (dim_left * dim_right)-dimensional operator."""
    m = as_square(matrix)
    if m.shape[0] != dim_left * dim_right:
        raise DimensionMismatch(f"matrix dim {m.shape[0]} != {dim_left} * {dim_right}")
    return np.einsum("abac->bc", m.reshape(dim_left, dim_right, dim_left, dim_right))


def _frozen_matrix(value: Any) -> np.ndarray:
    array = as_square(value).copy()
    array.setflags(write=False)
    return array


class Observable(MatrixMixin, BaseModel):
    """Traceless Hermitian operator on n qubits with spectral norm at most 1."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    n: int
    matrix: np.ndarray
    label: str = ""

    @field_validator("matrix", mode="before")
    @classmethod
    def coerce_matrix(cls, value: Any) -> np.ndarray:
        return _frozen_matrix(value)

    @model_validator(mode="after")
    def check_invariants(self) -> Self:
        if self.matrix.shape != (2**self.n, 2**self.n):
            raise DimensionMismatch(f"observable on n={self.n} qubits needs dim {2**self.n}, got {self.matrix.shape}")
        error = self.hermiticity_error()
        if error > HERMITIAN_TOL:
            raise InvalidObservable("hermitian", f"max |O - O^dagger| = {error:.3e}")
        trace = abs(self.trace())
        if trace > TRACE_TOL:
            raise InvalidObservable("traceless", f"|tr O| = {trace:.3e}")
        norm = self.spectral_norm()
        if norm > 1 + NORM_TOL:
            raise InvalidObservable("norm", f"spectral norm {norm:.12g} > 1")
        return self

    @classmethod
    def from_matrix(cls, matrix: Any, label: str = "") -> Self:
        m = as_square(matrix)
        return cls(n=qubits_for_dim(m.shape[0]), matrix=m, label=label)

    @classmethod
    def from_paulis(cls, terms: Mapping[str, complex], label: str = "") -> Self:
        """Build sum_k c_k P_k from ``{"XX": 1.0, "ZI": 0.5, ...}``."""
        if not terms:
            raise InvalidObservable("count", "empty Pauli sum")
        lengths = {len(letters) for letters in terms}
        if len(lengths) != 1:
            raise DimensionMismatch(f"Pauli strings of mixed length: {sorted(terms)}")
        matrix = sum(coef * pauli_operator(letters) for letters, coef in terms.items())
        return cls.from_matrix(matrix, label=label)

    def __str__(self) -> str:
        return self.label or f"Observable(n={self.n})"


class DensityMatrix(MatrixMixin, BaseModel):
    """Hermitian, unit-trace, positive semidefinite operator on n qubits."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    n: int
    matrix: np.ndarray

    @field_validator("matrix", mode="before")
    @classmethod
    def coerce_matrix(cls, value: Any) -> np.ndarray:
        return _frozen_matrix(value)

    @model_validator(mode="after")
    def check_invariants(self) -> Self:
        if self.matrix.shape != (2**self.n, 2**self.n):
            raise DimensionMismatch(f"state on n={self.n} qubits needs dim {2**self.n}, got {self.matrix.shape}")
        error = self.hermiticity_error()
        if error > STATE_TOL:
            raise InvalidState(f"not Hermitian: max |rho - rho^dagger| = {error:.3e}")
        trace = self.trace()
        if abs(trace - 1) > STATE_TOL:
            raise InvalidState(f"trace {trace.real:.12g} != 1")
        smallest = float(scipy.linalg.eigvalsh(0.5 * (self.matrix + self.dagger), subset_by_index=[0, 0])[0])
        if smallest < -STATE_TOL:
            raise InvalidState(f"negative eigenvalue {smallest:.3e}")
        return self

    @classmethod
    def from_matrix(cls, matrix: Any) -> Self:
        m = as_square(matrix)
        return cls(n=qubits_for_dim(m.shape[0]), matrix=m)

    @classmethod
    def pure(cls, psi: Any) -> Self:
        vector = np.asarray(psi, dtype=complex).ravel()
        norm = np.linalg.norm(vector)
        if norm == 0:
            raise InvalidState("zero state vector")
        vector = vector / norm
        return cls.from_matrix(np.outer(vector, vector.conj()))

    @classmethod
    def basis(cls, bits: str) -> Self:
        """Computational basis state, e.g. ``basis("01")`` is |0>|1>."""
        psi = np.zeros(2 ** len(bits), dtype=complex)
        psi[int(bits, 2)] = 1.0
        return cls.pure(psi)

    @classmethod
    def maximally_mixed(cls, n: int) -> Self:
        return cls(n=n, matrix=np.eye(2**n, dtype=complex) / 2**n)

    def purity(self) -> float:
        return float(np.real(np.einsum("ab,ba->", self.matrix, self.matrix)))


def as_matrix(value: Any) -> np.ndarray:
    """Dense matrix of an Observable, DensityMatrix or array-like."""
    if isinstance(value, MatrixMixin):
        return value.matrix
    return as_square(value)


def random_observable(n: int, seed: int, *stream: int) -> Observable:
    """
    GUE-normalized random observable: a Gaussian Hermitian matrix made traceless
    and scaled to unit spectral norm. Deterministic per (seed, *stream).
    """
    if n < 1:
        raise DimensionMismatch(f"n must be >= 1, got {n}")
    rng = make_rng(seed, OBSERVABLE_STREAM, *stream)
    dim = 2**n
    gaussian = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    hermitian = 0.5 * (gaussian + gaussian.conj().T)
    hermitian -= np.trace(hermitian).real / dim * np.eye(dim)
    hermitian /= np.max(np.abs(scipy.linalg.eigvalsh(hermitian)))
    return Observable(n=n, matrix=hermitian, label=f"random:seed={seed}")


def haar_vector(rng: np.random.Generator, dim: int) -> np.ndarray:
    psi = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return psi / np.linalg.norm(psi)


def haar_state(n: int, seed: int, *stream: int) -> DensityMatrix:
    """
    Haar-random pure state |psi><psi| from a normalized complex Gaussian vector.

    Extra `stream` keys select independent sub-streams of the same seed.
    """
    if n < 1:
        raise DimensionMismatch(f"n must be >= 1, got {n}")
    rng = make_rng(seed, STATE_STREAM, *stream)
    psi = haar_vector(rng, 2**n)
    return DensityMatrix(n=n, matrix=np.outer(psi, psi.conj()))


def expectation(rho: DensityMatrix | np.ndarray, observable: Observable | np.ndarray) -> float:
    """Real part of tr(rho O)."""
    r = as_matrix(rho)
    o = as_matrix(observable)
    if r.shape != o.shape:
        raise DimensionMismatch(f"state dim {r.shape} != operator dim {o.shape}")
    value = complex(np.einsum("ab,ba->", r, o))
    if abs(value.imag) > HERMITIAN_TOL:
        raise NotHermitian(f"tr(rho O) has imaginary part {value.imag:.3e}")
    return value.real
