"""
Pauli-basis Choi representation J(Phi^dagger) of the adjoint of a unital channel.

J lives on H_Y (x) H_X with the factor carrying Phi^dagger(M_j) first:

    J = sum_j Phi^dagger(M_j) (x) M_j
      = I(x)I + alpha sum_i O_i (x) Z_i + 2^n sum_{k,j} beta_kj M_k (x) M_j

No 1/4^n normalization is applied, so unitality reads Tr_Y J = 2^n I and the
trace of J is 4^n. The free coefficients beta_kj are recorded as the Pauli
coefficient of M_k (x) M_j divided by 2^n; `beta_scale` converts between the two.
"""

import logging
from collections.abc import Iterable, Mapping, Sequence
from functools import cache, cached_property
from typing import Any, Self

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from incompat.errors import (
    DimensionMismatch,
    InfeasibleBeta,
    InvalidObservable,
    InvalidParameter,
    ReservedBetaKey,
)
from incompat.operators import (
    DensityMatrix,
    Observable,
    PauliString,
    all_pauli_strings,
    as_matrix,
    as_square,
    hermitian_eig,
    lambda_min,
    partial_trace_left,
    pauli_operator,
    pauli_stack,
    qubits_for_dim,
)

logger = logging.getLogger(__name__)

BetaKey = tuple[str, str]
Beta = dict[BetaKey, float]

ALPHA_FLOOR = 1e-9


def as_observables(observables: Iterable[Observable | np.ndarray]) -> list[Observable]:
    """Validate a list of observables sharing n, with 2 <= n_O <= n."""
    result = [o if isinstance(o, Observable) else Observable.from_matrix(o) for o in observables]
    if len(result) < 2:
        raise InvalidObservable("count", f"need at least 2 observables, got {len(result)}")
    sizes = {o.n for o in result}
    if len(sizes) != 1:
        raise DimensionMismatch(f"observables act on different qubit counts: {sorted(sizes)}")
    n = result[0].n
    if len(result) > n:
        raise InvalidObservable("count", f"{len(result)} observables exceed n={n} qubits")
    return result


def reserved_outputs(n: int, n_observables: int) -> frozenset[str]:
    """Output strings whose column of J is fixed by the channel contract: all-I and Z_1..Z_nO."""
    z_strings = [PauliString.z_on(i, n).letters for i in range(1, n_observables + 1)]
    return frozenset([PauliString.identity(n).letters, *z_strings])


def beta_support(n: int, n_observables: int, mode: str = "full") -> list[BetaKey]:
    """
    Admissible (k, j) pairs in index order.

    ``mode="diagonal"`` keeps only outputs M_j built from I and Z. Twirling the X
    factor of J with Z-type Paulis preserves positivity and the reserved terms while
    removing every off-diagonal M_j, so this restriction loses no achievable alpha.
    """
    reserved = reserved_outputs(n, n_observables)
    keys = []
    for k in all_pauli_strings(n):
        if k.is_identity:
            continue
        for j in all_pauli_strings(n):
            if j.letters in reserved:
                continue
            if mode == "diagonal" and not j.is_diagonal:
                continue
            keys.append((k.letters, j.letters))
    return keys


def normalize_beta(beta: Mapping[Any, float] | None, n: int, n_observables: int) -> Beta:
    """Canonical ``{(k, j): value}`` map; keys may be PauliStrings, letter pairs or ``"K,J"`` strings."""
    if not beta:
        return {}
    reserved = reserved_outputs(n, n_observables)
    result: Beta = {}
    for key, value in beta.items():
        if isinstance(key, str):
            key = tuple(key.split(","))
        if len(key) != 2:
            raise ReservedBetaKey(f"beta key {key!r} is not a (k, j) pair")
        k, j = (p.letters if isinstance(p, PauliString) else PauliString(p).letters for p in key)
        if len(k) != n or len(j) != n:
            raise DimensionMismatch(f"beta key ({k}, {j}) does not act on n={n} qubits")
        if set(k) == {"I"}:
            raise ReservedBetaKey(f"beta key ({k}, {j}): input string must not be the identity")
        if j in reserved:
            raise ReservedBetaKey(f"beta key ({k}, {j}): output string {j} is reserved")
        value = float(value)
        if value != 0.0:
            result[(k, j)] = result.get((k, j), 0.0) + value
    return result


@cache
def pair_operator(k: str, j: str) -> np.ndarray:
    matrix = np.kron(pauli_operator(k), pauli_operator(j))
    matrix.setflags(write=False)
    return matrix


def coupling_operator(observables: Sequence[Observable]) -> np.ndarray:
    """S = sum_i O_i (x) Z_i."""
    n = observables[0].n
    return sum(np.kron(o.matrix, pauli_operator(PauliString.z_on(i, n))) for i, o in enumerate(observables, start=1))


def beta_scale(n: int) -> int:
    return 2**n


def pair_sum(coefficients: Mapping[BetaKey, float], n: int) -> np.ndarray:
    """sum c_kj M_k (x) M_j for raw Pauli coefficients c."""
    dim = 4**n
    total = np.zeros((dim, dim), dtype=complex)
    for (k, j), value in coefficients.items():
        total += value * pair_operator(k, j)
    return total


def beta_operator(beta: Mapping[BetaKey, float], n: int) -> np.ndarray:
    """B = 2^n sum beta_kj M_k (x) M_j."""
    return beta_scale(n) * pair_sum(beta, n)


def assemble(coupling: np.ndarray, alpha: float, beta_term: np.ndarray | None = None) -> np.ndarray:
    """Dense J = I + alpha * S + B, symmetrized; no validation."""
    dense = np.eye(coupling.shape[0], dtype=complex) + alpha * coupling
    if beta_term is not None:
        dense = dense + beta_term
    return 0.5 * (dense + dense.conj().T)


class ChoiMatrix(BaseModel):
    """
    Choi matrix of an adjoint unital channel with its Pauli coefficient record.

    Also acts as the channel itself: `adjoint` applies Phi^dagger and `apply`
    applies Phi through the coefficient record.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    n: int
    alpha: float
    beta: Beta
    observables: list[Observable]
    dense: np.ndarray

    @model_validator(mode="after")
    def check_dense(self) -> Self:
        dim = 4**self.n
        if self.dense.shape != (dim, dim):
            raise DimensionMismatch(f"Choi matrix on n={self.n} needs dim {dim}, got {self.dense.shape}")
        self.dense.setflags(write=False)
        return self

    @property
    def dim(self) -> int:
        return 4**self.n

    @cached_property
    def coefficients(self) -> np.ndarray:
        """c[k, j] = tr(J (M_k (x) M_j)) / 4^n in Pauli index order."""
        d = 2**self.n
        paulis = pauli_stack(self.n)
        tensor = self.dense.reshape(d, d, d, d)
        coefficients = np.real(np.einsum("abcd,kca,jdb->kj", tensor, paulis, paulis, optimize=True)) / 4**self.n
        coefficients.setflags(write=False)
        return coefficients

    def coefficient_matrix(self) -> np.ndarray:
        return self.coefficients

    def pauli_coefficients(self, tol: float = 1e-12) -> dict[BetaKey, float]:
        """
        Non-negligible entries of `coefficient_matrix` keyed by letter pairs.

        These are raw Pauli coefficients of J, so a free pair carries 2^n beta_kj.
        """
        coefficients = self.coefficient_matrix()
        keys = [p.letters for p in all_pauli_strings(self.n)]
        return {
            (keys[k], keys[j]): float(coefficients[k, j])
            for k, j in zip(*np.nonzero(np.abs(coefficients) > tol), strict=True)
        }

    def adjoint(self, operator: Any) -> np.ndarray:
        """Phi^dagger(A) = sum_j a_j sum_k c_kj M_k with a_j = tr(A M_j) / 2^n."""
        a = as_square(as_matrix(operator))
        d = 2**self.n
        if a.shape != (d, d):
            raise DimensionMismatch(f"operator dim {a.shape} != {d}")
        paulis = pauli_stack(self.n)
        inputs = np.einsum("ab,jba->j", a, paulis) / d
        outputs = self.coefficient_matrix() @ inputs
        return np.einsum("k,kab->ab", outputs, paulis)

    def apply(self, rho: DensityMatrix | np.ndarray) -> np.ndarray:
        """Phi(rho) = 2^-n sum_j tr(rho Phi^dagger(M_j)) M_j."""
        r = as_matrix(rho)
        d = 2**self.n
        if r.shape != (d, d):
            raise DimensionMismatch(f"state dim {r.shape} != {d}")
        paulis = pauli_stack(self.n)
        readout = np.einsum("ab,kba->k", r, paulis)
        outputs = readout @ self.coefficient_matrix() / d
        result = np.einsum("j,jab->ab", outputs, paulis)
        return 0.5 * (result + result.conj().T)

    def lambda_min(self) -> float:
        return hermitian_eig(self.dense).lambda_min


def build_choi(
    observables: Sequence[Observable | np.ndarray],
    alpha: float,
    beta: Mapping[Any, float] | None = None,
) -> ChoiMatrix:
    """
    Assemble J = I(x)I + alpha sum_i O_i(x)Z_i + 2^n sum beta_kj M_k(x)M_j.

    Raises:
        InvalidObservable: fewer than two observables, more observables than qubits, or invalid operators.
        ReservedBetaKey: a beta key uses the identity input or a reserved output string.
        DimensionMismatch: observables or beta keys disagree on n.
        InvalidParameter: alpha outside (0, 1].
    """
    obs = as_observables(observables)
    if not 0.0 < alpha <= 1.0:
        raise InvalidParameter(f"alpha must lie in (0, 1], got {alpha}")
    n = obs[0].n
    coefficients = normalize_beta(beta, n, len(obs))
    dense = assemble(coupling_operator(obs), alpha, beta_operator(coefficients, n) if coefficients else None)
    return ChoiMatrix(n=n, alpha=float(alpha), beta=coefficients, observables=obs, dense=dense)


def _dense_of(choi: ChoiMatrix | np.ndarray) -> np.ndarray:
    return choi.dense if isinstance(choi, ChoiMatrix) else as_square(choi)


def check_cp(choi: ChoiMatrix | np.ndarray, tol: float = 1e-8) -> tuple[bool, float]:
    """Complete positivity: J >= 0 up to `tol`. Returns (ok, lambda_min)."""
    smallest = hermitian_eig(_dense_of(choi)).lambda_min
    return smallest >= -tol, smallest


def check_unital_tp(choi: ChoiMatrix | np.ndarray, tol: float = 1e-9) -> bool:
    """Tr_Y J = 2^n I (unital Phi) and unit I(x)I coefficient (trace-preserving Phi)."""
    dense = _dense_of(choi)
    n = qubits_for_dim(dense.shape[0]) // 2
    d = 2**n
    if d * d != dense.shape[0]:
        raise DimensionMismatch(f"Choi dimension {dense.shape[0]} is not 4^n")
    marginal = partial_trace_left(dense, d, d)
    unital = float(np.max(np.abs(marginal - d * np.eye(d)))) <= tol
    identity_coefficient = complex(np.trace(dense)) / d**2
    trace_preserving = abs(identity_coefficient - 1.0) <= tol
    if not unital:
        logger.debug("Choi marginal deviates from %d*I", d)
    return unital and trace_preserving


def solve_alpha_zero_beta(
    observables: Sequence[Observable | np.ndarray],
    beta: Mapping[Any, float] | None = None,
    tol: float = 1e-10,
) -> float:
    """
    Largest alpha in (0, 1] with lambda_min(J(alpha, beta)) >= 0, by bisection.

    lambda_min is concave along an affine Hermitian pencil, so the sign changes
    at most once on [1e-9, 1].

    Raises:
        InfeasibleBeta: if J is already indefinite at alpha = 1e-9.
    """
    obs = as_observables(observables)
    n = obs[0].n
    coefficients = normalize_beta(beta, n, len(obs))
    coupling = coupling_operator(obs)
    beta_term = beta_operator(coefficients, n) if coefficients else None
    return bisect_alpha(coupling, beta_term, tol=tol)


def bisect_alpha(coupling: np.ndarray, beta_term: np.ndarray | None, tol: float = 1e-10) -> float:
    low, high = ALPHA_FLOOR, 1.0
    start = lambda_min(assemble(coupling, low, beta_term))
    if start < 0:
        raise InfeasibleBeta(f"lambda_min = {start:.3e} < 0 at alpha = {low}")
    if lambda_min(assemble(coupling, high, beta_term)) >= 0:
        return 1.0
    while high - low > tol:
        middle = 0.5 * (low + high)
        if lambda_min(assemble(coupling, middle, beta_term)) >= 0:
            low = middle
        else:
            high = middle
    return low
