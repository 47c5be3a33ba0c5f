"""
Analytic sample-complexity ratios and the copy-count sweep over the
O1(p) = (1 - p) Z1Z2 + (p/2)(Z1 + Z2), O2 = X1X2 family.

The ratios compare N_Z, the copies consumed when one channel output serves both
Z readouts, with N_O = N_O1 + N_O2 for direct projective measurement.
"""

import logging
from collections.abc import Sequence
from functools import partial
from typing import TYPE_CHECKING, Self

import numpy as np
from pydantic import Field, model_validator

from incompat.choi import ChoiMatrix
from incompat.config import SamplingOptions, SolverOptions
from incompat.errors import DegenerateDenominator, InvalidParameter
from incompat.model import RecordModel
from incompat.operators import DensityMatrix, Observable, as_matrix, expectation, haar_state
from incompat.presets import fig3_pair
from incompat.sampling import (
    Channel,
    EstimatorStats,
    copies_to_accuracy,
    projective_source,
    qnn_z_source,
    sample_projective,
    sample_qnn_z,
)
from incompat.solver import iterative_alpha_max

if TYPE_CHECKING:
    from incompat.engine import ComputeEngine

logger = logging.getLogger(__name__)

DENOMINATOR_TOL = 1e-12

SWEEP_COLUMNS = ["p", "alpha_max", "lambda_haar", "lambda_exp", "n_z", "n_o", "trials"]


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha <= 1.0:
        raise InvalidParameter(f"alpha must lie in (0, 1], got {alpha}")


def _moments(rho: DensityMatrix | np.ndarray, observable: Observable | np.ndarray) -> tuple[float, float]:
    """(E[o], E[o^2]) for a projective measurement of O on rho."""
    o = as_matrix(observable)
    return expectation(rho, o), expectation(rho, o @ o)


def analytic_variances(
    rho: DensityMatrix | np.ndarray, observable: Observable | np.ndarray, alpha: float
) -> tuple[float, float]:
    """(Var[o], Var[z / alpha]) = (tr(rho O^2) - tr(rho O)^2, 1/alpha^2 - tr(rho O)^2)."""
    _check_alpha(alpha)
    mean, second = _moments(rho, observable)
    return second - mean**2, 1.0 / alpha**2 - mean**2


def lambda_ratio(
    rho: DensityMatrix | np.ndarray,
    o1: Observable | np.ndarray,
    o2: Observable | np.ndarray,
    alpha: float,
) -> float:
    """
    Per-state ratio (1 - alpha^2 min(E[o1]^2, E[o2]^2)) / (alpha^2 (Var[o1] + Var[o2])).

    Raises:
        DegenerateDenominator: if both observables are deterministic on rho.
    """
    _check_alpha(alpha)
    (mean1, second1), (mean2, second2) = _moments(rho, o1), _moments(rho, o2)
    variance = (second1 - mean1**2) + (second2 - mean2**2)
    denominator = alpha**2 * variance
    if denominator <= DENOMINATOR_TOL:
        raise DegenerateDenominator(f"variance sum {variance:.3e} vanishes on this state")
    return (1.0 - alpha**2 * min(mean1**2, mean2**2)) / denominator


def lambda_haar(o1: Observable | np.ndarray, o2: Observable | np.ndarray, alpha: float) -> float:
    """
    Haar average (d(d+1) - alpha^2 min(tr O1^2, tr O2^2)) / (d alpha^2 (tr O1^2 + tr O2^2)).

    Raises:
        DegenerateDenominator: if tr O1^2 + tr O2^2 vanishes.
    """
    _check_alpha(alpha)
    m1, m2 = as_matrix(o1), as_matrix(o2)
    d = m1.shape[0]
    t1 = float(np.real(np.trace(m1 @ m1)))
    t2 = float(np.real(np.trace(m2 @ m2)))
    if t1 + t2 <= DENOMINATOR_TOL:
        raise DegenerateDenominator(f"tr O1^2 + tr O2^2 = {t1 + t2:.3e}")
    return (d * (d + 1) - alpha**2 * min(t1, t2)) / (d * alpha**2 * (t1 + t2))


class BernsteinBounds(RecordModel):
    epsilon: float
    delta: float
    N_O: float
    N_Z: float

    @property
    def ratio(self) -> float:
        return self.N_Z / self.N_O

    def summary_fields(self) -> list[str]:
        return [f"N_O={self.N_O:.6g}", f"N_Z={self.N_Z:.6g}", f"ratio={self.ratio:.6g}"]


def bernstein_bounds(
    o1: Observable | np.ndarray,
    o2: Observable | np.ndarray,
    rho: DensityMatrix | np.ndarray,
    alpha: float,
    epsilon: float,
    delta: float,
) -> BernsteinBounds:
    """
    Sufficient copy counts from Bernstein's inequality, keeping the O(epsilon) terms:

        N_O = 2 ln(2/delta) / eps^2 [E[o1^2] + E[o2^2] - E[o1]^2 - E[o2]^2 + 2/3 (E[o1] + E[o2]) eps]
        N_Z = 2 ln(2/delta) / eps^2 [1/alpha^2 - min(E[o1]^2, E[o2]^2) + 2/3 (alpha + 1)/alpha eps]

    N_Z counts copies whose Z readouts serve both observables.
    """
    _check_alpha(alpha)
    if not 0.0 < epsilon < 1.0:
        raise InvalidParameter(f"epsilon must lie in (0, 1), got {epsilon}")
    if not 0.0 < delta < 1.0:
        raise InvalidParameter(f"delta must lie in (0, 1), got {delta}")
    (mean1, second1), (mean2, second2) = _moments(rho, o1), _moments(rho, o2)
    scale = 2.0 * np.log(2.0 / delta) / epsilon**2
    n_o = scale * (second1 + second2 - mean1**2 - mean2**2 + 2.0 / 3.0 * (mean1 + mean2) * epsilon)
    n_z = scale * (1.0 / alpha**2 - min(mean1**2, mean2**2) + 2.0 / 3.0 * (alpha + 1.0) / alpha * epsilon)
    return BernsteinBounds(epsilon=epsilon, delta=delta, N_O=float(n_o), N_Z=float(n_z))


class IdenticalObservablesReport(RecordModel):
    alpha: float
    trace_square: float
    threshold: float
    lambda_haar: float
    condition_met: bool

    def summary_fields(self) -> list[str]:
        return [f"lambda_haar={self.lambda_haar:.6g}", f"condition_met={self.condition_met}"]


def identical_observables_report(observable: Observable | np.ndarray, alpha: float) -> IdenticalObservablesReport:
    """
    Haar ratio for O1 = O2 = O. It drops below 1 only if alpha^2 tr(O^2) exceeds
    d(d+1)/(2d+1); the report carries both sides of that condition.
    """
    m = as_matrix(observable)
    d = m.shape[0]
    trace_square = float(np.real(np.trace(m @ m)))
    threshold = d * (d + 1) / (2 * d + 1)
    return IdenticalObservablesReport(
        alpha=alpha,
        trace_square=trace_square,
        threshold=threshold,
        lambda_haar=lambda_haar(m, m, alpha),
        condition_met=alpha**2 * trace_square > threshold,
    )


class ComplexityReport(RecordModel):
    p: float
    alpha_max: float
    lambda_state: float | None = None
    lambda_haar: float
    lambda_exp: float
    n_z: int
    n_o: int
    trials: int = Field(ge=1)

    @model_validator(mode="after")
    def check_ratio(self) -> Self:
        if self.lambda_exp <= 0:
            raise ValueError(f"lambda_exp must be > 0, got {self.lambda_exp}")
        return self

    def row(self) -> dict[str, float | int]:
        return self.to_dict(fields=set(SWEEP_COLUMNS))

    def summary_fields(self) -> list[str]:
        return [
            f"p={self.p:g}",
            f"alpha_max={self.alpha_max:.6f}",
            f"lambda_haar={self.lambda_haar:.4f}",
            f"lambda_exp={self.lambda_exp:.4f}",
        ]


def _trial(
    o1: Observable,
    o2: Observable,
    channel: ChoiMatrix,
    alpha: float,
    epsilon: float,
    seed: int,
    sampling: SamplingOptions,
    index: int,
    number: int,
) -> tuple[int, int, float]:
    """(N_Z, N_O, per-state lambda) for one Haar-random state."""
    rho = haar_state(o1.n, seed, index, number)
    e1, e2 = expectation(rho, o1), expectation(rho, o2)
    n_o = copies_to_accuracy(
        projective_source(rho, o1, sampling.eigen_tol), e1, epsilon, seed, sampling, (index, number, 1)
    ) + copies_to_accuracy(
        projective_source(rho, o2, sampling.eigen_tol), e2, epsilon, seed, sampling, (index, number, 2)
    )
    n_z = copies_to_accuracy(qnn_z_source(channel, rho, alpha), (e1, e2), epsilon, seed, sampling, (index, number, 3))
    return n_z, n_o, lambda_ratio(rho, o1, o2, alpha)


def fig3_sweep(
    p_values: Sequence[float],
    trials: int,
    epsilon: float,
    seed: int,
    solver: SolverOptions | None = None,
    sampling: SamplingOptions | None = None,
    engine: "ComputeEngine | None" = None,
) -> list[ComplexityReport]:
    """
    Copy-count experiment over the p-family.

    For every p the solver certificate at alpha_max is used as the channel. Each
    trial draws a Haar-random pure state keyed by (seed, p index, trial) and counts
    the copies needed to reach `epsilon` accuracy: N_O = N_O1 + N_O2 from two
    independent projective runs, N_Z from one joint Z-basis run reading both qubits.
    Reported counts and ratios are medians over trials.
    """
    if trials < 1:
        raise InvalidParameter(f"trials must be >= 1, got {trials}")
    if any(not 0.0 <= p <= 1.0 for p in p_values):
        raise InvalidParameter(f"p values must lie in [0, 1], got {list(p_values)}")
    solver = solver or SolverOptions()
    sampling = sampling or SamplingOptions()

    reports = []
    for index, p in enumerate(p_values):
        o1, o2 = fig3_pair(p)
        result = iterative_alpha_max([o1, o2], solver)
        alpha = result.alpha_max
        channel = result.certificate([o1, o2])

        trial = partial(_trial, o1, o2, channel, alpha, epsilon, seed, sampling, index)
        outcomes = engine.map(trial, range(trials)) if engine is not None else [trial(t) for t in range(trials)]
        n_z = np.array([o[0] for o in outcomes], dtype=float)
        n_o = np.array([o[1] for o in outcomes], dtype=float)
        report = ComplexityReport(
            p=float(p),
            alpha_max=alpha,
            lambda_state=float(np.median([o[2] for o in outcomes])),
            lambda_haar=lambda_haar(o1, o2, alpha),
            lambda_exp=float(np.median(n_z / n_o)),
            n_z=int(np.median(n_z)),
            n_o=int(np.median(n_o)),
            trials=trials,
        )
        logger.info("sweep %s", report)
        reports.append(report)
    return reports


class VarianceReport(RecordModel):
    alpha: float
    shots: int
    expectations: list[float]
    var_o: list[float]
    var_z: list[float]
    lambda_state: float | None = None
    bernstein: BernsteinBounds
    projective: list[EstimatorStats]
    qnn_z: list[EstimatorStats]

    def summary_fields(self) -> list[str]:
        fields = [f"alpha={self.alpha:.6f}", f"shots={self.shots}"]
        if self.lambda_state is not None:
            fields.append(f"lambda={self.lambda_state:.4f}")
        return fields + [f"bernstein_ratio={self.bernstein.ratio:.4f}"]


def variance_report(
    o1: Observable,
    o2: Observable,
    rho: DensityMatrix,
    channel: Channel,
    alpha: float,
    shots: int,
    seed: int,
    epsilon: float = 0.01,
    delta: float = 0.05,
) -> VarianceReport:
    """
    Analytic and sampled variances of both estimators on one state, with the
    Bernstein copy counts for (epsilon, delta).
    """
    analytic = [analytic_variances(rho, o, alpha) for o in (o1, o2)]
    try:
        lambda_state = lambda_ratio(rho, o1, o2, alpha)
    except DegenerateDenominator as e:
        logger.warning("per-state lambda undefined: %s", e)
        lambda_state = None
    return VarianceReport(
        alpha=alpha,
        shots=shots,
        expectations=[expectation(rho, o1), expectation(rho, o2)],
        var_o=[v[0] for v in analytic],
        var_z=[v[1] for v in analytic],
        lambda_state=lambda_state,
        bernstein=bernstein_bounds(o1, o2, rho, alpha, epsilon, delta),
        projective=[sample_projective(rho, o, shots, seed, index) for index, o in enumerate((o1, o2), start=1)],
        qnn_z=list(sample_qnn_z(channel, rho, alpha, shots, seed, 3)),
    )
