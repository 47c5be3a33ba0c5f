"""
Maximal scaling alpha_max of a unital channel with Phi^dagger(Z_i) = alpha O_i.

Two strategies are provided:

* `iterative_alpha_max` raises the minimal eigenvalue of J by stepping beta
  along Pauli directions whose sandwich with the ground space of J has a uniform
  sign, re-solving alpha by bisection after every step;
* `penalty_alpha_max` walks alpha upward in small increments and, for each
  target, maximizes a soft minimum of the spectrum of J over beta.

The iterative strategy finishes with a penalty continuation from its last
certificate (`SolverOptions.polish`), which can only increase alpha. Both
strategies then try to certify alpha = 1 exactly.
"""

import logging
from collections.abc import Mapping, Sequence
from itertools import pairwise
from typing import TYPE_CHECKING, Any, Literal, Self

import numpy as np
import scipy.linalg
import scipy.optimize
from pydantic import Field, field_serializer, field_validator, model_validator
from scipy.special import logsumexp

from incompat.choi import (
    Beta,
    BetaKey,
    ChoiMatrix,
    as_observables,
    assemble,
    beta_scale,
    beta_support,
    bisect_alpha,
    build_choi,
    coupling_operator,
    pair_operator,
    pair_sum,
)
from incompat.config import SolverOptions
from incompat.errors import DimensionMismatch, InfeasibleBeta
from incompat.model import RecordModel
from incompat.operators import (
    Observable,
    all_pauli_strings,
    hermitian_eig,
    lambda_min,
    pauli_stack,
    qubits_for_dim,
)

if TYPE_CHECKING:
    from incompat.engine import ComputeEngine

logger = logging.getLogger(__name__)

MIXED = "mixed"
CERTIFICATE_FLOOR = -1e-8
SignEntry = int | str


class AlphaResult(RecordModel):
    alpha_max: float
    alpha_zero: float
    beta: Beta = Field(default_factory=dict)
    alpha_history: list[float]
    ground_dim_history: list[int] = Field(default_factory=list)
    final_lambda_min: float
    iterations: int
    strategy: Literal["iterative", "penalty"]
    polished: bool = False

    @field_validator("beta", mode="before")
    @classmethod
    def parse_beta_keys(cls, value: Any) -> Any:
        if isinstance(value, Mapping):
            return {(tuple(key.split(",")) if isinstance(key, str) else tuple(key)): val for key, val in value.items()}
        return value

    @field_serializer("beta")
    def serialize_beta(self, beta: Beta) -> dict[str, float]:
        return {f"{k},{j}": value for (k, j), value in sorted(beta.items())}

    @model_validator(mode="after")
    def check_history(self) -> Self:
        if not self.alpha_history:
            raise ValueError("alpha_history must not be empty")
        if any(later < earlier for earlier, later in pairwise(self.alpha_history)):
            raise ValueError("alpha_history must be non-decreasing")
        if self.alpha_max != self.alpha_history[-1]:
            raise ValueError("alpha_max must equal the last alpha_history entry")
        if self.final_lambda_min < CERTIFICATE_FLOOR:
            raise ValueError(f"final_lambda_min {self.final_lambda_min:.3e} is below {CERTIFICATE_FLOOR:g}")
        return self

    def certificate(self, observables: Sequence[Observable]) -> ChoiMatrix:
        return build_choi(observables, self.alpha_max, self.beta)

    def summary_fields(self) -> list[str]:
        return [f"alpha_max={self.alpha_max:.9g}", f"strategy={self.strategy}", f"iterations={self.iterations}"]


def ground_space(choi: ChoiMatrix | np.ndarray, degeneracy_tol: float = 1e-8) -> np.ndarray:
    """Orthonormal eigenvectors (as columns) with eigenvalue within `degeneracy_tol` of lambda_min."""
    dense = choi.dense if isinstance(choi, ChoiMatrix) else choi
    spectrum = hermitian_eig(dense)
    mask = spectrum.values <= spectrum.lambda_min + degeneracy_tol
    return spectrum.vectors[:, mask]


def sign_table(
    ground: np.ndarray,
    n: int,
    n_observables: int | None = None,
    keys: Sequence[BetaKey] | None = None,
    zero_tol: float = 1e-9,
) -> dict[BetaKey, SignEntry]:
    """
    Sign of the sandwich <g_i| M_k (x) M_j |g_i> over the ground space.

    The sign is evaluated on the compression G^dagger (M_k (x) M_j) G, so it does
    not depend on which orthonormal basis of a degenerate ground space is used:
    +1 (or -1) when every diagonal element is >= 0 (<= 0) in every ground basis,
    "mixed" otherwise. Values below `zero_tol` count as zero; pairs that vanish
    on the whole ground space are omitted. `keys` defaults to every admissible
    pair for `n_observables` (default n) observables.
    """
    g = as_ground(ground, n)
    if keys is None:
        keys = beta_support(n, n_observables or n, "full")
    d = 2**n
    paulis = pauli_stack(n)
    vectors = g.T.reshape(-1, d, d)
    conj = vectors.conj()
    by_input: dict[str, list[str]] = {}
    for k, j in keys:
        by_input.setdefault(k, []).append(j)
    index = {p: i for i, p in enumerate(_letters(n))}
    table: dict[BetaKey, SignEntry] = {}
    for k, outputs in by_input.items():
        left = np.einsum("ab,hbc->hac", paulis[index[k]], vectors)
        js = [index[j] for j in outputs]
        compression = np.einsum("iyx,hyc,jxc->jih", conj, left, paulis[js], optimize=True)
        eigenvalues = np.linalg.eigvalsh(0.5 * (compression + compression.conj().transpose(0, 2, 1)))
        for j, values in zip(outputs, eigenvalues, strict=True):
            low, high = values[0], values[-1]
            if high <= zero_tol and low >= -zero_tol:
                continue
            if low >= -zero_tol:
                table[(k, j)] = 1
            elif high <= zero_tol:
                table[(k, j)] = -1
            else:
                table[(k, j)] = MIXED
    return table


def as_ground(ground: Any, n: int) -> np.ndarray:
    g = np.asarray(ground, dtype=complex)
    if g.ndim == 1:
        g = g[:, None]
    if g.ndim != 2 or g.shape[0] != 4**n:
        raise DimensionMismatch(f"ground vectors must have length {4**n}, got shape {g.shape}")
    if g.shape[1] == 0:
        raise DimensionMismatch("ground space is empty")
    return g


def _letters(n: int) -> list[str]:
    return [p.letters for p in all_pauli_strings(n)]


def uniform_directions(table: Mapping[BetaKey, SignEntry]) -> dict[BetaKey, int]:
    return {key: sign for key, sign in table.items() if sign != MIXED}


def _pair_term(coefficients: Beta, n: int) -> np.ndarray | None:
    return pair_sum(coefficients, n) if coefficients else None


def _as_beta(coefficients: Mapping[BetaKey, float], n: int) -> Beta:
    scale = beta_scale(n)
    return {key: value / scale for key, value in coefficients.items() if value != 0.0}


def _qubits(coupling: np.ndarray) -> int:
    return qubits_for_dim(coupling.shape[0]) // 2


def _stalled(history: list[float], opts: SolverOptions) -> bool:
    return len(history) > opts.window and history[-1] - history[-1 - opts.window] < opts.tolerance


def iterative_alpha_max(
    observables: Sequence[Observable | np.ndarray], opts: SolverOptions | None = None
) -> AlphaResult:
    """
    Ground-space iteration for alpha_max.

    Each iteration scans the sign table of the current ground space, steps
    beta by eta * s along every uniform-sign direction (halving eta while the
    re-solved alpha would decrease or J becomes infeasible) and re-solves
    alpha by bisection. Stops when alpha reaches 1, no direction improves,
    alpha stalls over `opts.window` iterations, or `opts.max_iterations` is hit.
    A final attempt certifies alpha = 1 when the stepping ends just below it.

    Steps are taken on the raw Pauli coefficients of J; the result reports beta.

    Raises:
        InvalidObservable: for invalid inputs.
    """
    opts = opts or SolverOptions()
    obs = as_observables(observables)
    n, n_obs = obs[0].n, len(obs)
    coupling = coupling_operator(obs)
    allowed = beta_support(n, n_obs, opts.support)

    alpha = alpha_zero = bisect_alpha(coupling, None, tol=opts.bisection_tol)
    coefficients: Beta = {}
    history = [alpha]
    ground_dims: list[int] = []
    directions: dict[BetaKey, int] = {}
    iterations = 0
    logger.debug("iterative solver start: alpha0=%.12g support=%s (%d pairs)", alpha, opts.support, len(allowed))

    while iterations < opts.max_iterations and alpha < 1.0:
        iterations += 1
        dense = assemble(coupling, alpha, _pair_term(coefficients, n))
        ground = ground_space(dense, opts.ground_window())
        ground_dims.append(int(ground.shape[1]))
        if opts.rescan or not directions:
            directions = uniform_directions(sign_table(ground, n, n_obs, keys=allowed))
        if not directions:
            logger.debug("iteration %d: no uniform-sign direction at alpha=%.12g", iterations, alpha)
            break

        eta = opts.eta
        accepted: tuple[Beta, float] | None = None
        while eta >= opts.min_eta:
            trial = dict(coefficients)
            for key, sign in directions.items():
                trial[key] = trial.get(key, 0.0) + eta * sign
            try:
                candidate = bisect_alpha(coupling, pair_sum(trial, n), tol=opts.bisection_tol)
            except InfeasibleBeta:
                candidate = -np.inf
            if candidate >= alpha:
                accepted = (trial, candidate)
                break
            eta *= 0.5
        if accepted is None:
            logger.debug("iteration %d: backtracking exhausted at alpha=%.12g", iterations, alpha)
            break
        coefficients, alpha = accepted
        history.append(alpha)
        logger.debug("iteration %d: alpha=%.12g eta=%.3g directions=%d", iterations, alpha, eta, len(directions))
        if _stalled(history, opts):
            break

    polished = False
    if opts.polish and alpha < 1.0:
        keys = sorted(set(allowed) | set(coefficients))
        start = np.array([coefficients.get(key, 0.0) for key in keys])
        polish_alpha, x, steps, dims = _continuation(coupling, keys, opts, alpha, start)
        if polish_alpha > alpha:
            logger.debug("polish raised alpha from %.12g to %.12g", alpha, polish_alpha)
            alpha, coefficients = polish_alpha, _beta_from_vector(keys, x)
            history.extend(steps)
            ground_dims.extend(dims)
            polished = True

    if alpha < 1.0:
        unit = certify_unit_alpha(coupling, n_obs, coefficients, allowed, opts)
        if unit is not None:
            alpha, coefficients = 1.0, unit
            history.append(alpha)

    final = hermitian_eig(assemble(coupling, alpha, _pair_term(coefficients, n))).lambda_min
    logger.info("iterative alpha_max=%.12g after %d iterations (polished=%s)", alpha, iterations, polished)
    return AlphaResult(
        alpha_max=alpha,
        alpha_zero=alpha_zero,
        beta=_as_beta(coefficients, n),
        alpha_history=history,
        ground_dim_history=ground_dims,
        final_lambda_min=final,
        iterations=iterations,
        strategy="iterative",
        polished=polished,
    )


def penalty_alpha_max(observables: Sequence[Observable | np.ndarray], opts: SolverOptions | None = None) -> AlphaResult:
    """
    Continuation in alpha with an inner maximization of lambda_min over beta.

    alpha grows by delta_alpha (doubling after success up to max_delta_alpha,
    halving after failure down to min_delta_alpha); the inner problem maximizes
    a soft minimum of the spectrum of J with L-BFGS-B and accepts a target
    once the exact lambda_min is >= lambda_floor.
    """
    opts = opts or SolverOptions()
    obs = as_observables(observables)
    n, n_obs = obs[0].n, len(obs)
    coupling = coupling_operator(obs)
    keys = beta_support(n, n_obs, opts.support)
    alpha_zero = bisect_alpha(coupling, None, tol=opts.bisection_tol)
    alpha, x, steps, dims = _continuation(coupling, keys, opts, alpha_zero, np.zeros(len(keys)))
    coefficients = _beta_from_vector(keys, x)
    if alpha < 1.0:
        unit = certify_unit_alpha(coupling, n_obs, coefficients, keys, opts)
        if unit is not None:
            alpha, coefficients = 1.0, unit
            steps.append(alpha)
    final = hermitian_eig(assemble(coupling, alpha, _pair_term(coefficients, n))).lambda_min
    logger.info("penalty alpha_max=%.12g after %d accepted steps", alpha, len(steps))
    return AlphaResult(
        alpha_max=alpha,
        alpha_zero=alpha_zero,
        beta=_as_beta(coefficients, n),
        alpha_history=[alpha_zero, *steps],
        ground_dim_history=dims,
        final_lambda_min=final,
        iterations=len(steps),
        strategy="penalty",
    )


def certify_unit_alpha(
    coupling: np.ndarray,
    n_observables: int,
    coefficients: Mapping[BetaKey, float],
    keys: Sequence[BetaKey],
    opts: SolverOptions | None = None,
) -> Beta | None:
    """
    Raw Pauli coefficients c with lambda_min(J(1, c)) >= lambda_floor, or None.

    Tries `coefficients` as given, then line searches at alpha = 1 along the
    uniform-sign directions of the exact ground space, and finally the soft-min
    maximization over `keys`.
    """
    opts = opts or SolverOptions()
    n = _qubits(coupling)
    current = dict(coefficients)
    for _ in range(opts.window):
        dense = assemble(coupling, 1.0, _pair_term(current, n))
        smallest = lambda_min(dense)
        if smallest >= opts.lambda_floor:
            logger.debug("alpha = 1 certified with lambda_min=%.3e", smallest)
            return current
        ground = ground_space(dense, opts.degeneracy_tol)
        directions = uniform_directions(sign_table(ground, n, n_observables, keys=keys))
        if not directions:
            break
        step = _unit_line_search(coupling, current, directions, smallest, opts)
        if step <= 0.0:
            break
        for key, sign in directions.items():
            current[key] = current.get(key, 0.0) + step * sign

    names = sorted(set(keys) | set(current))
    if not names:
        return None
    stack = np.stack([pair_operator(k, j) for k, j in names])
    start = np.array([current.get(key, 0.0) for key in names])
    x, smallest = _maximize_lambda_min(coupling, stack, 1.0, start, opts)
    if smallest >= opts.lambda_floor:
        logger.debug("alpha = 1 certified by soft-min search with lambda_min=%.3e", smallest)
        return _beta_from_vector(names, x)
    return None


def _unit_line_search(
    coupling: np.ndarray,
    coefficients: Beta,
    directions: Mapping[BetaKey, int],
    smallest: float,
    opts: SolverOptions,
) -> float:
    """Step t in [0, 2] maximizing lambda_min(J(1, c + t s)); 0 when nothing improves."""
    n = _qubits(coupling)
    base = assemble(coupling, 1.0, _pair_term(coefficients, n))
    direction = pair_sum(dict(directions), n)

    def negative(t: float) -> float:
        return -lambda_min(base + t * direction)

    result = scipy.optimize.minimize_scalar(
        negative, bounds=(0.0, 2.0), method="bounded", options={"xatol": opts.bisection_tol}
    )
    return float(result.x) if -result.fun > smallest else 0.0


def _beta_from_vector(keys: Sequence[BetaKey], x: np.ndarray) -> Beta:
    return {key: float(value) for key, value in zip(keys, x, strict=True) if value != 0.0}


def _continuation(
    coupling: np.ndarray,
    keys: Sequence[BetaKey],
    opts: SolverOptions,
    alpha: float,
    x: np.ndarray,
) -> tuple[float, np.ndarray, list[float], list[int]]:
    """Returns (alpha, beta vector, accepted alphas, ground dimensions at each accepted alpha)."""
    stack = np.stack([pair_operator(k, j) for k, j in keys])
    accepted: list[float] = []
    dims: list[int] = []
    step = opts.delta_alpha
    attempts = 0
    while alpha < 1.0 and step >= opts.min_delta_alpha and attempts < opts.max_iterations:
        attempts += 1
        target = min(1.0, alpha + step)
        candidate, smallest = _maximize_lambda_min(coupling, stack, target, x, opts)
        if smallest >= opts.lambda_floor:
            alpha, x = target, candidate
            accepted.append(alpha)
            dense = assemble(coupling, alpha, np.tensordot(x, stack, axes=1))
            dims.append(int(ground_space(dense, opts.ground_window()).shape[1]))
            step = min(2 * step, opts.max_delta_alpha)
            logger.debug("continuation: accepted alpha=%.12g lambda_min=%.3e", alpha, smallest)
            if _stalled(accepted, opts):
                break
        else:
            step *= 0.5
    return alpha, x, accepted, dims


def _maximize_lambda_min(
    coupling: np.ndarray,
    stack: np.ndarray,
    alpha: float,
    x0: np.ndarray,
    opts: SolverOptions,
) -> tuple[np.ndarray, float]:
    """Maximize lambda_min(J(alpha, x)) over x, warm-started at x0; returns (x, lambda_min)."""
    base = np.eye(coupling.shape[0], dtype=complex) + alpha * coupling

    def dense(x: np.ndarray) -> np.ndarray:
        m = base + np.tensordot(x, stack, axes=1)
        return 0.5 * (m + m.conj().T)

    best_x, best = x0, lambda_min(dense(x0))
    if best >= opts.lambda_floor or len(x0) == 0:
        return best_x, best

    x = x0
    for temperature in opts.temperatures:

        def objective(params: np.ndarray, t: float = temperature) -> tuple[float, np.ndarray]:
            values, vectors = scipy.linalg.eigh(dense(params))
            shifted = -t * values
            total = logsumexp(shifted)
            weights = np.exp(shifted - total)
            slopes = np.real(np.einsum("ai,mab,bi->mi", vectors.conj(), stack, vectors, optimize=True))
            return total / t, -(slopes @ weights)

        result = scipy.optimize.minimize(
            objective, x, jac=True, method="L-BFGS-B", options={"maxiter": opts.inner_maxiter}
        )
        x = result.x
        smallest = lambda_min(dense(x))
        if smallest > best:
            best_x, best = x, smallest
        if best >= opts.lambda_floor:
            break
    return best_x, best


def solve_many(
    observable_sets: Sequence[Sequence[Observable]],
    opts: SolverOptions | None = None,
    strategy: Literal["iterative", "penalty"] = "iterative",
    engine: "ComputeEngine | None" = None,
) -> list[AlphaResult]:
    """Solve independent observable sets, in parallel when an engine is given; order is preserved."""
    solve = iterative_alpha_max if strategy == "iterative" else penalty_alpha_max

    def run(observables: Sequence[Observable]) -> AlphaResult:
        return solve(observables, opts)

    if engine is None:
        return [run(observables) for observables in observable_sets]
    return engine.map(run, observable_sets)

