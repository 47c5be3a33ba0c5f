"""
Monte-Carlo measurement simulation.

Every estimator is described by an `OutcomeSource`: a Born distribution over
outcomes and, for each estimator, the value it records for every outcome. An
N-shot record is drawn as multinomial counts, which has the same distribution as
N independent shots.
"""

import logging
from collections.abc import Sequence
from typing import Any, Literal, Protocol, Self

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from incompat.config import SamplingOptions
from incompat.errors import BudgetExceeded, DimensionMismatch, InvalidParameter, InvalidState
from incompat.model import RecordModel
from incompat.operators import (
    SAMPLING_STREAM,
    DensityMatrix,
    Observable,
    as_matrix,
    hermitian_eig,
    make_rng,
)

logger = logging.getLogger(__name__)

PROBABILITY_TOL = 1e-9
NEGATIVE_TOL = 1e-7

EstimatorKind = Literal["projective", "qnn_z"]


class Channel(Protocol):
    n: int

    def apply(self, rho: DensityMatrix | np.ndarray) -> np.ndarray: ...


class EstimatorStats(RecordModel):
    N: int = Field(ge=1)
    mean: float
    sample_variance: float
    kind: EstimatorKind
    alpha: float | None = None
    variance_stderr: float = 0.0

    @model_validator(mode="after")
    def check_variance(self) -> Self:
        if self.sample_variance < 0:
            raise ValueError(f"sample_variance must be >= 0, got {self.sample_variance}")
        if self.kind == "qnn_z" and self.alpha is None:
            raise ValueError("qnn_z statistics need the alpha used for scaling")
        return self

    @classmethod
    def from_counts(
        cls, values: np.ndarray, counts: np.ndarray, kind: EstimatorKind, alpha: float | None = None
    ) -> Self:
        """Moments of a tallied record: `values[k]` was observed `counts[k]` times."""
        total = int(np.sum(counts))
        mean = float(values @ counts / total)
        centered = values - mean
        m2 = float((centered**2) @ counts / total)
        m4 = float((centered**4) @ counts / total)
        variance = m2 * total / (total - 1) if total > 1 else 0.0
        # Var(s^2) = (mu4 - (N - 3) / (N - 1) sigma^4) / N
        spread = m4 - (total - 3) / (total - 1) * m2 * m2 if total > 1 else 0.0
        stderr = float(np.sqrt(max(spread, 0.0) / total))
        return cls(
            N=total, mean=mean, sample_variance=max(variance, 0.0), kind=kind, alpha=alpha, variance_stderr=stderr
        )

    def summary_fields(self) -> list[str]:
        return [f"kind={self.kind}", f"N={self.N}", f"mean={self.mean:.6g}", f"var={self.sample_variance:.6g}"]


class OutcomeSource(BaseModel):
    """
    Outcome distribution of one measurement setting.

    `values` has one row per estimator read from the same shot and one column
    per outcome.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    probabilities: np.ndarray
    values: np.ndarray
    kind: EstimatorKind
    alpha: float | None = None

    @model_validator(mode="after")
    def check_shapes(self) -> Self:
        if self.values.ndim != 2 or self.values.shape[1] != self.probabilities.size:
            raise DimensionMismatch(
                f"values shape {self.values.shape} does not match {self.probabilities.size} outcomes"
            )
        return self

    @property
    def estimators(self) -> int:
        return self.values.shape[0]

    def truth(self) -> np.ndarray:
        return self.values @ self.probabilities

    def draw(self, shots: int, rng: np.random.Generator) -> np.ndarray:
        return rng.multinomial(shots, self.probabilities)

    def stats(self, counts: np.ndarray) -> list[EstimatorStats]:
        return [EstimatorStats.from_counts(row, counts, self.kind, self.alpha) for row in self.values]


def born_probabilities(raw: Any, tol: float = PROBABILITY_TOL) -> np.ndarray:
    """
    Clip round-off negatives and renormalize.

    Raises:
        InvalidState: if an entry is below -NEGATIVE_TOL or the total deviates from 1 by more than tol.
    """
    probabilities = np.real(np.asarray(raw, dtype=complex))
    if np.any(probabilities < -NEGATIVE_TOL):
        raise InvalidState(f"negative outcome probability {probabilities.min():.3e}")
    total = float(np.sum(probabilities))
    if abs(total - 1.0) > tol:
        raise InvalidState(f"outcome probabilities sum to {total!r}")
    probabilities = np.clip(probabilities, 0.0, None)
    return probabilities / probabilities.sum()


def _state(rho: DensityMatrix | np.ndarray) -> DensityMatrix:
    return rho if isinstance(rho, DensityMatrix) else DensityMatrix.from_matrix(rho)


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha <= 1.0:
        raise InvalidParameter(f"alpha must lie in (0, 1], got {alpha}")


def projective_source(
    rho: DensityMatrix | np.ndarray, observable: Observable | np.ndarray, eigen_tol: float = 1e-9
) -> OutcomeSource:
    """Projective measurement of O with eigenvalues closer than `eigen_tol` merged into one projector."""
    state = _state(rho)
    spectrum = hermitian_eig(as_matrix(observable))
    if spectrum.vectors.shape[0] != state.dim:
        raise DimensionMismatch(f"observable dim {spectrum.vectors.shape[0]} != state dim {state.dim}")
    weights = np.real(np.einsum("ai,ab,bi->i", spectrum.vectors.conj(), state.matrix, spectrum.vectors))

    outcomes: list[float] = []
    probabilities: list[float] = []
    start = 0
    for index in range(1, spectrum.values.size + 1):
        if index == spectrum.values.size or spectrum.values[start] - spectrum.values[index] > eigen_tol:
            outcomes.append(float(np.mean(spectrum.values[start:index])))
            probabilities.append(float(np.sum(weights[start:index])))
            start = index
    return OutcomeSource(
        probabilities=born_probabilities(probabilities), values=np.array([outcomes]), kind="projective"
    )


def z_parities(n: int, qubits: int) -> np.ndarray:
    """z_j(b) = +1/-1 for computational basis index b; qubit 1 is the most significant bit."""
    basis = np.arange(2**n)
    return np.array([1 - 2 * ((basis >> (n - j)) & 1) for j in range(1, qubits + 1)], dtype=float)


def qnn_z_source(channel: Channel, rho: DensityMatrix | np.ndarray, alpha: float, qubits: int = 2) -> OutcomeSource:
    """
    Computational-basis measurement of E(rho), read out as z_j / alpha for qubits 1..`qubits`.

    Every qubit is read from the same shot.
    """
    _check_alpha(alpha)
    state = _state(rho)
    if not 1 <= qubits <= state.n:
        raise DimensionMismatch(f"cannot read {qubits} qubits of an n={state.n} state")
    output = channel.apply(state)
    probabilities = born_probabilities(np.diagonal(output))
    return OutcomeSource(
        probabilities=probabilities, values=z_parities(state.n, qubits) / alpha, kind="qnn_z", alpha=alpha
    )


def sample_projective(
    rho: DensityMatrix | np.ndarray, observable: Observable | np.ndarray, shots: int, seed: int, *stream: int
) -> EstimatorStats:
    """
    N projective measurements of O on rho.

    Raises:
        InvalidState: if rho is not a valid density matrix.
        InvalidParameter: if shots < 1.
    """
    if shots < 1:
        raise InvalidParameter(f"shot count must be >= 1, got {shots}")
    source = projective_source(rho, observable)
    counts = source.draw(shots, make_rng(seed, SAMPLING_STREAM, *stream))
    return source.stats(counts)[0]


def sample_qnn_z(
    channel: Channel,
    rho: DensityMatrix | np.ndarray,
    alpha: float,
    shots: int,
    seed: int,
    *stream: int,
    qubits: int = 2,
) -> tuple[EstimatorStats, ...]:
    """N Z-basis shots on E(rho); one EstimatorStats per read qubit, scaled by 1/alpha."""
    if shots < 1:
        raise InvalidParameter(f"shot count must be >= 1, got {shots}")
    source = qnn_z_source(channel, rho, alpha, qubits)
    counts = source.draw(shots, make_rng(seed, SAMPLING_STREAM, *stream))
    return tuple(source.stats(counts))


def copies_to_accuracy(
    source: OutcomeSource,
    truth: float | Sequence[float],
    epsilon: float,
    seed: int,
    opts: SamplingOptions | None = None,
    stream: Sequence[int] = (),
) -> int:
    """
    Smallest checkpoint N in first_checkpoint * 2^k whose running estimate, and
    the estimate at 2N, are within `epsilon` of `truth` for every estimator of
    the source.

    Shots are added incrementally, so the estimate at 2N extends the record of N.

    Raises:
        InvalidParameter: if epsilon <= 0.
        BudgetExceeded: if no N <= opts.max_shots qualifies.
    """
    if epsilon <= 0:
        raise InvalidParameter(f"epsilon must be > 0, got {epsilon}")
    opts = opts or SamplingOptions()
    target = np.broadcast_to(np.asarray(truth, dtype=float), (source.estimators,))
    rng = make_rng(seed, SAMPLING_STREAM, *stream)

    counts = np.zeros(source.probabilities.size, dtype=np.int64)
    drawn = 0
    candidate: int | None = None
    checkpoint = opts.first_checkpoint
    while checkpoint <= 2 * opts.max_shots:
        counts += source.draw(checkpoint - drawn, rng)
        drawn = checkpoint
        within = bool(np.all(np.abs(source.values @ counts / drawn - target) <= epsilon))
        if within and candidate is not None:
            logger.debug("accuracy %g held from N=%d through %d", epsilon, candidate, checkpoint)
            return candidate
        candidate = checkpoint if within and checkpoint <= opts.max_shots else None
        checkpoint *= 2
    raise BudgetExceeded(f"no checkpoint up to {opts.max_shots} shots reached accuracy {epsilon}")
