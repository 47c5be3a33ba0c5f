"""
Equational-form SDP for alpha_max, exported as data for external solvers.

    maximize  C . X   subject to  A_k . X = b_k,  X >= 0

with the elementwise inner product A . X = sum_ab A_ab X_ab = tr(A^T X). Each
constraint matrix therefore stores the transpose of the operator it pairs with
J, and C . J = alpha for every J produced by `build_choi`.
"""

import logging
from collections.abc import Sequence

import numpy as np
from pydantic import ConfigDict, Field

from incompat.choi import ChoiMatrix, as_observables, coupling_operator
from incompat.errors import DegenerateBasis, DimensionMismatch
from incompat.model import RecordModel
from incompat.operators import Observable, PauliString, all_pauli_strings, pauli_operator

logger = logging.getLogger(__name__)

BASIS_TOL = 1e-12
DEPENDENCE_TOL = 1e-9


class SdpConstraint(RecordModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    label: str = ""
    matrix: np.ndarray
    rhs: float


class SdpProblem(RecordModel):
    model_config = ConfigDict(arbitrary_types_allowed=True)

    n: int
    psd_dim: int
    objective: np.ndarray
    constraints: list[SdpConstraint] = Field(default_factory=list)

    def objective_value(self, x: ChoiMatrix | np.ndarray) -> float:
        return _dot(self.objective, _dense(x))

    def residuals(self, x: ChoiMatrix | np.ndarray) -> np.ndarray:
        """A_k . X - b_k for every constraint."""
        dense = _dense(x)
        return np.array([_dot(c.matrix, dense) - c.rhs for c in self.constraints])

    def summary_fields(self) -> list[str]:
        return [f"n={self.n}", f"psd_dim={self.psd_dim}", f"constraints={len(self.constraints)}"]


def _dense(x: ChoiMatrix | np.ndarray) -> np.ndarray:
    return x.dense if isinstance(x, ChoiMatrix) else np.asarray(x, dtype=complex)


def _dot(a: np.ndarray, b: np.ndarray) -> float:
    if a.shape != b.shape:
        raise DimensionMismatch(f"matrix shapes {a.shape} and {b.shape} differ")
    return float(np.real(np.sum(a * b)))


def orthogonal_complement(observable: Observable) -> list[np.ndarray]:
    """
    Gram-Schmidt completion of O over the full Pauli operator basis.

    Returns 4^n - 1 Hermitian matrices orthonormal in the Hilbert-Schmidt inner
    product and orthogonal to O.

    Raises:
        DegenerateBasis: if ||O||_F < 1e-12 or the completion collapses.
    """
    norm = np.linalg.norm(observable.matrix)
    if norm < BASIS_TOL:
        raise DegenerateBasis(f"observable {observable} has Frobenius norm {norm:.3e}")
    basis = [observable.matrix / norm]
    for pauli in all_pauli_strings(observable.n):
        vector = pauli_operator(pauli).astype(complex)
        for element in basis:
            vector = vector - np.real(np.vdot(element, vector)) * element
        residual = np.linalg.norm(vector)
        if residual > DEPENDENCE_TOL:
            basis.append(vector / residual)
    complement = basis[1:]
    if len(complement) != 4**observable.n - 1:
        raise DegenerateBasis(f"completion produced {len(complement)} of {4**observable.n - 1} elements")
    return complement


def export_sdp(observables: Sequence[Observable | np.ndarray]) -> SdpProblem:
    """
    Build the SDP data: objective, trace normalization, both marginal families,
    one orthogonal-complement block per observable and one cross-ratio
    constraint per consecutive observable pair.
    """
    obs = as_observables(observables)
    n = obs[0].n
    d = 2**n
    identity = np.eye(d, dtype=complex)
    coupling = coupling_operator(obs)
    objective = coupling.T / float(np.real(np.trace(coupling @ coupling)))

    constraints = [SdpConstraint(label="trace", matrix=np.eye(d * d, dtype=complex), rhs=float(d * d))]
    paulis = list(all_pauli_strings(n))[1:]
    for j in paulis:
        op = np.kron(identity, pauli_operator(j))
        constraints.append(SdpConstraint(label=f"unital:{j}", matrix=op.T, rhs=0.0))
    for k in paulis:
        op = np.kron(pauli_operator(k), identity)
        constraints.append(SdpConstraint(label=f"trace-preserving:{k}", matrix=op.T, rhs=0.0))
    zs = [pauli_operator(PauliString.z_on(i, n)) for i in range(1, len(obs) + 1)]
    for i, (o, z) in enumerate(zip(obs, zs, strict=True), start=1):
        for m, element in enumerate(orthogonal_complement(o), start=1):
            constraints.append(SdpConstraint(label=f"complement:{i}:{m}", matrix=np.kron(element, z).T, rhs=0.0))
    for i in range(len(obs) - 1):
        first, second = obs[i].matrix, obs[i + 1].matrix
        a = float(np.real(np.trace(second @ second)))
        b = float(np.real(np.trace(first @ first)))
        scale = np.hypot(a, b)
        op = (a / scale) * np.kron(first, zs[i]) - (b / scale) * np.kron(second, zs[i + 1])
        constraints.append(SdpConstraint(label=f"ratio:{i + 1}:{i + 2}", matrix=op.T, rhs=0.0))

    logger.info("exported SDP: n=%d dim=%d constraints=%d", n, d * d, len(constraints))
    return SdpProblem(n=n, psd_dim=d * d, objective=objective, constraints=constraints)
