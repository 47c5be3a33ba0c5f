"""
Training of the mixed-unitary channel with Adam on central finite-difference gradients.

Only the unitary whose generator is perturbed changes between the two sides of
a difference quotient, so the readout traces tr(rho_l U_i^dagger Z_j U_i) are
cached per unitary and perturbed generators are evaluated as one batch.
"""

import logging
from collections.abc import Sequence
from typing import Self

import numpy as np
from pydantic import Field, model_validator
from scipy.special import softmax

from incompat.choi import as_observables
from incompat.config import TrainingConfig
from incompat.model import RecordModel
from incompat.operators import TRAINING_STREAM, Observable, PauliString, make_rng, pauli_operator
from incompat.qnn import LabeledState, MixedUnitaryChannel, generate_dataset, stack_dataset, unitaries_from_params

logger = logging.getLogger(__name__)

ALPHA_MIN = 1e-6

Params = dict[str, np.ndarray]


class Adam:
    """Adam over a dict of named parameter arrays, updated in place."""

    def __init__(self, lr: float = 0.001, beta1: float = 0.9, beta2: float = 0.999, epsilon: float = 1e-8):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.epsilon = epsilon
        self.m: Params = {}
        self.v: Params = {}
        self.t = 0

    def step(self, params: Params, grads: Params) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        step_size = self.lr / bc1
        for key in params:
            g = grads[key]
            if key not in self.m:
                self.m[key] = np.zeros_like(params[key])
                self.v[key] = np.zeros_like(params[key])
            self.m[key] *= self.beta1
            self.m[key] += (1.0 - self.beta1) * g
            self.v[key] *= self.beta2
            self.v[key] += (1.0 - self.beta2) * (g * g)
            denom = np.sqrt(self.v[key] * (1.0 / bc2)) + self.epsilon
            params[key] -= step_size * self.m[key] / denom


class TrainingProblem:
    """
    Batch objective L_O - alpha_weight * alpha over two labeled datasets.

    Parameters are held in a dict with keys ``logits`` (d_a,), ``generators``
    (d_a, 4^n - 1) and ``alpha`` (1,).
    """

    def __init__(self, n: int, data1: Sequence[LabeledState], data2: Sequence[LabeledState], alpha_weight: float = 1.0):
        self.n = n
        self.alpha_weight = alpha_weight
        states1, targets1 = stack_dataset(data1)
        states2, targets2 = stack_dataset(data2)
        self.states = [states1, states2]
        self.targets = [targets1, targets2]
        self.readouts = [pauli_operator(PauliString.z_on(qubit, n)) for qubit in (1, 2)]

    def traces(self, unitaries: np.ndarray, which: int) -> np.ndarray:
        """tr(rho_l U^dagger Z U) for a batch of unitaries (..., d, d); shape (..., L)."""
        rotated = np.einsum("...ba,bc,...cd->...ad", unitaries.conj(), self.readouts[which], unitaries, optimize=True)
        return np.real(np.einsum("lab,...ba->...l", self.states[which], rotated, optimize=True))

    def loss_o(self, predictions: Sequence[np.ndarray], alpha: float | np.ndarray) -> np.ndarray:
        alpha = np.asarray(alpha, dtype=float)[..., None]
        return sum(
            np.mean((alpha * targets - p) ** 2, axis=-1) for targets, p in zip(self.targets, predictions, strict=True)
        )

    def objective(self, predictions: Sequence[np.ndarray], alpha: float | np.ndarray) -> np.ndarray:
        return self.loss_o(predictions, alpha) - self.alpha_weight * np.asarray(alpha, dtype=float)

    def evaluate(self, params: Params) -> float:
        """L_O at `params`."""
        weights = softmax(params["logits"])
        unitaries = unitaries_from_params(params["generators"], self.n)
        predictions = [weights @ self.traces(unitaries, which) for which in (0, 1)]
        return float(self.loss_o(predictions, params["alpha"][0]))

    def gradient(self, params: Params, h: float) -> Params:
        """Central finite differences of the objective with step h for every parameter."""
        logits, generators, alpha = params["logits"], params["generators"], float(params["alpha"][0])
        weights = softmax(logits)
        unitaries = unitaries_from_params(generators, self.n)
        cached = [self.traces(unitaries, which) for which in (0, 1)]
        base = [weights @ t for t in cached]

        shift = h * np.eye(logits.size)
        plus, minus = softmax(logits + shift, axis=1), softmax(logits - shift, axis=1)
        grad_logits = (
            self.objective([plus @ t for t in cached], alpha) - self.objective([minus @ t for t in cached], alpha)
        ) / (2 * h)

        count = generators.shape[1]
        shifted = generators[:, None, :] + h * np.eye(count)[None]
        unshifted = generators[:, None, :] - h * np.eye(count)[None]

        def perturbed(thetas: np.ndarray) -> np.ndarray:
            batch = unitaries_from_params(thetas, self.n)
            predictions = [
                b + weights[:, None, None] * (self.traces(batch, which) - t[:, None, :])
                for which, (b, t) in enumerate(zip(base, cached, strict=True))
            ]
            return self.objective(predictions, alpha)

        grad_generators = (perturbed(shifted) - perturbed(unshifted)) / (2 * h)
        grad_alpha = (self.objective(base, alpha + h) - self.objective(base, alpha - h)) / (2 * h)
        return {"logits": grad_logits, "generators": grad_generators, "alpha": np.atleast_1d(grad_alpha)}


class TrainResult(RecordModel):
    alpha: float
    loss_history: list[tuple[int, float, float]]
    channel: MixedUnitaryChannel
    config: TrainingConfig = Field(default_factory=TrainingConfig)

    @model_validator(mode="after")
    def check_history(self) -> Self:
        if len(self.loss_history) != self.config.epochs + 1:
            raise ValueError(f"loss_history has {len(self.loss_history)} entries, expected {self.config.epochs + 1}")
        return self

    @property
    def final_loss_o(self) -> float:
        return self.loss_history[-1][1]

    def summary_fields(self) -> list[str]:
        return [f"alpha={self.alpha:.9g}", f"L_O={self.final_loss_o:.3e}", f"epochs={self.config.epochs}"]


class Checkpoint(RecordModel):
    n: int
    d_a: int
    epoch: int
    alpha: float
    weight_logits: np.ndarray
    generator_params: np.ndarray

    @classmethod
    def from_result(cls, result: TrainResult) -> Self:
        channel = result.channel
        return cls(
            n=channel.n,
            d_a=channel.d_a,
            epoch=result.config.epochs,
            alpha=result.alpha,
            weight_logits=np.array(channel.weight_logits),
            generator_params=np.array(channel.generator_params),
        )

    def to_channel(self) -> MixedUnitaryChannel:
        return MixedUnitaryChannel(
            n=self.n, d_a=self.d_a, weight_logits=self.weight_logits, generator_params=self.generator_params
        )


def train(
    o1: Observable,
    o2: Observable,
    config: TrainingConfig | None = None,
    initial: MixedUnitaryChannel | None = None,
) -> TrainResult:
    """
    Fit E^dagger(Z_j) = alpha O_j on Haar-random datasets while rewarding large alpha.

    Adam updates logits, generators and alpha together; alpha is clamped to
    (0, 1] after every step and the learning rate decays by `lr_decay` per epoch.
    The recorded history holds (epoch, L_O, L_O - alpha) for epochs 0..epochs.

    Raises:
        InvalidObservable: for invalid observables.
    """
    config = config or TrainingConfig()
    obs = as_observables([o1, o2])
    n = obs[0].n
    data1 = generate_dataset(obs[0], config.dataset_size_1, config.seed, 1)
    data2 = generate_dataset(obs[1], config.dataset_size_2, config.seed, 2)
    problem = TrainingProblem(n, data1, data2, alpha_weight=config.alpha_weight)

    if initial is None:
        rng = make_rng(config.seed, TRAINING_STREAM)
        initial = MixedUnitaryChannel.random(n, config.d_a, rng, scale=config.init_scale)
    params: Params = {
        "logits": np.array(initial.weight_logits, dtype=float),
        "generators": np.array(initial.generator_params, dtype=float),
        "alpha": np.array([config.alpha_init], dtype=float),
    }
    adam = Adam(lr=config.learning_rate, beta1=config.beta1, beta2=config.beta2, epsilon=config.epsilon)

    loss_o = problem.evaluate(params)
    history = [(0, loss_o, loss_o - float(params["alpha"][0]))]
    logger.info("training d_a=%d epochs=%d lr=%g seed=%d", config.d_a, config.epochs, config.learning_rate, config.seed)
    for epoch in range(1, config.epochs + 1):
        grads = problem.gradient(params, config.fd_step)
        adam.step(params, grads)
        np.clip(params["alpha"], ALPHA_MIN, 1.0, out=params["alpha"])
        adam.lr *= config.lr_decay
        loss_o = problem.evaluate(params)
        alpha = float(params["alpha"][0])
        history.append((epoch, loss_o, loss_o - alpha))
        if epoch % 200 == 0:
            logger.debug("epoch %d: alpha=%.6f L_O=%.3e", epoch, alpha, loss_o)

    channel = MixedUnitaryChannel(
        n=n, d_a=initial.d_a, weight_logits=params["logits"], generator_params=params["generators"]
    )
    alpha = float(params["alpha"][0])
    logger.info("training finished: alpha=%.6f L_O=%.3e", alpha, history[-1][1])
    return TrainResult(alpha=alpha, loss_history=history, channel=channel, config=config)
