"""
Majorization upper bound on alpha.

A unital channel maps every Hermitian operator to one it majorizes, so
Phi^dagger(x Z_1 + y Z_2) = alpha (x O_1 + y O_2) forces
x Z_1 + y Z_2 > alpha (x O_1 + y O_2) for every direction (x, y).
"""

import logging
from collections.abc import Sequence
from itertools import combinations

import numpy as np
import scipy.linalg

from incompat.errors import DimensionMismatch, InvalidParameter
from incompat.model import RecordModel
from incompat.operators import Observable, PauliString, as_matrix, pauli_operator

logger = logging.getLogger(__name__)

PREFIX_TOL = 1e-12


def descending_eigenvalues(matrix: np.ndarray) -> np.ndarray:
    m = as_matrix(matrix)
    return scipy.linalg.eigvalsh(0.5 * (m + m.conj().T))[::-1]


def majorizes(a: np.ndarray, b: np.ndarray, tol: float = 1e-9) -> bool:
    """True if vector `a` majorizes `b`: dominating descending prefix sums and equal totals."""
    a = np.sort(np.asarray(a, dtype=float))[::-1]
    b = np.sort(np.asarray(b, dtype=float))[::-1]
    if a.shape != b.shape:
        raise DimensionMismatch(f"cannot compare spectra of length {a.size} and {b.size}")
    prefix_a, prefix_b = np.cumsum(a), np.cumsum(b)
    return bool(np.all(prefix_a >= prefix_b - tol) and abs(prefix_a[-1] - prefix_b[-1]) <= tol)


def direction_bound(target: np.ndarray, image: np.ndarray) -> float:
    """
    Largest alpha with eig(target) > alpha * eig(image).

    Only prefixes whose image sum is positive constrain alpha; returns inf when none does.
    """
    z = np.cumsum(descending_eigenvalues(target))
    c = np.cumsum(descending_eigenvalues(image))
    mask = c > PREFIX_TOL
    if not np.any(mask):
        return np.inf
    return float(np.min(z[mask] / c[mask]))


def _pair_bound(z1: np.ndarray, z2: np.ndarray, o1: np.ndarray, o2: np.ndarray, directions: int) -> float:
    bound = np.inf
    for theta in 2 * np.pi * np.arange(directions) / directions:
        x, y = np.cos(theta), np.sin(theta)
        bound = min(bound, direction_bound(x * z1 + y * z2, x * o1 + y * o2))
    return bound


def majorization_bound(o1: Observable | np.ndarray, o2: Observable | np.ndarray, directions: int = 360) -> float:
    """
    Majorization bound on alpha over a uniform grid of `directions` angles in [0, 2 pi), clamped to 1.

    Raises:
        InvalidParameter: fewer than 4 directions.
        DimensionMismatch: observables of different size.
    """
    return majorization_bound_all([o1, o2], directions)


def majorization_bound_all(observables: Sequence[Observable | np.ndarray], directions: int = 360) -> float:
    """Pairwise generalization to n_O observables: the minimum of the two-observable bound over pairs (i, j)."""
    if directions < 4:
        raise InvalidParameter(f"directions must be >= 4, got {directions}")
    matrices = [as_matrix(o) for o in observables]
    shapes = {m.shape for m in matrices}
    if len(shapes) != 1:
        raise DimensionMismatch(f"observables have different shapes: {sorted(shapes)}")
    n = int(matrices[0].shape[0]).bit_length() - 1
    if len(matrices) > n:
        raise DimensionMismatch(f"{len(matrices)} observables need at least as many qubits, got n={n}")
    zs = [pauli_operator(PauliString.z_on(i, n)) for i in range(1, len(matrices) + 1)]
    bound = np.inf
    for i, j in combinations(range(len(matrices)), 2):
        bound = min(bound, _pair_bound(zs[i], zs[j], matrices[i], matrices[j], directions))
    logger.debug("majorization bound %.12g over %d directions", bound, directions)
    return float(min(1.0, bound))


def axis_bounds(observables: Sequence[Observable | np.ndarray]) -> list[float]:
    """Single-observable constraints Z_i > alpha O_i, one bound per observable (clamped to 1)."""
    matrices = [as_matrix(o) for o in observables]
    n = int(matrices[0].shape[0]).bit_length() - 1
    return [
        float(min(1.0, direction_bound(pauli_operator(PauliString.z_on(i, n)), m)))
        for i, m in enumerate(matrices, start=1)
    ]


class MajorizationReport(RecordModel):
    alpha_maj: float
    directions: int
    axis_bounds: list[float]

    def summary_fields(self) -> list[str]:
        return [f"alpha_maj={self.alpha_maj:.9g}", f"directions={self.directions}"]


def majorization_report(observables: Sequence[Observable | np.ndarray], directions: int = 360) -> MajorizationReport:
    return MajorizationReport(
        alpha_maj=majorization_bound_all(observables, directions),
        directions=directions,
        axis_bounds=axis_bounds(observables),
    )
