"""
Tests for incompat/training.py
"""

import numpy as np
import pytest
from pydantic import ValidationError

from incompat.config import TrainingConfig
from incompat.errors import InvalidObservable
from incompat.operators import make_rng
from incompat.presets import random_pair
from incompat.qnn import MixedUnitaryChannel, adjoint_observable, generate_dataset, loss
from incompat.solver import iterative_alpha_max
from incompat.training import Adam, Checkpoint, TrainingProblem, TrainResult, train

SQRT2_HALF = np.sqrt(2) / 2


@pytest.fixture
def short_config():
    return TrainingConfig(epochs=15, dataset_size_1=20, dataset_size_2=20, seed=1)


@pytest.fixture(scope="module")
def problem(example1_pair):
    """Example-1 training problem on 30 + 30 states."""
    data1 = generate_dataset(example1_pair[0], 30, 0, 1)
    data2 = generate_dataset(example1_pair[1], 30, 0, 2)
    return TrainingProblem(2, data1, data2, alpha_weight=0.5), data1, data2


def _random_params(seed: int) -> dict[str, np.ndarray]:
    rng = make_rng(seed)
    return {
        "logits": rng.standard_normal(3),
        "generators": 0.3 * rng.standard_normal((3, 15)),
        "alpha": np.array([rng.uniform(0.3, 0.9)]),
    }


def _flat(grads: dict[str, np.ndarray]) -> np.ndarray:
    return np.concatenate([grads[key].ravel() for key in ("logits", "generators", "alpha")])


class TestAdam:
    def test_minimizes_quadratic(self):
        params = {"x": np.array([3.0, -2.0])}
        adam = Adam(lr=0.1)
        for _ in range(500):
            adam.step(params, {"x": 2 * params["x"]})
        assert np.all(np.abs(params["x"]) < 0.1)

    def test_first_step_size_is_lr(self):
        params = {"x": np.array([1.0, 1.0])}
        Adam(lr=0.05).step(params, {"x": np.array([10.0, -0.1])})
        assert np.allclose(params["x"], [0.95, 1.05], atol=1e-6)


class TestTrainingProblem:
    def test_evaluate_matches_loss(self, problem):
        training, data1, data2 = problem
        params = _random_params(0)
        channel = MixedUnitaryChannel(
            n=2, d_a=3, weight_logits=params["logits"], generator_params=params["generators"]
        )
        alpha = float(params["alpha"][0])
        assert training.evaluate(params) == pytest.approx(loss(channel, alpha, data1, data2)[1], rel=1e-10)

    def test_gradient_second_order(self, problem):
        training, _, _ = problem
        h = 0.04
        for seed in range(10):
            params = _random_params(seed)
            reference = (4 * _flat(training.gradient(params, h / 8)) - _flat(training.gradient(params, h / 4))) / 3
            coarse = np.linalg.norm(_flat(training.gradient(params, h)) - reference)
            fine = np.linalg.norm(_flat(training.gradient(params, h / 2)) - reference)
            assert coarse / fine == pytest.approx(4.0, rel=0.3)

    def test_gradient_matches_forward_objective(self, problem):
        training, _, _ = problem
        params = _random_params(4)
        grads = training.gradient(params, 1e-5)
        bumped = {key: value.copy() for key, value in params.items()}
        bumped["generators"][1, 7] += 1e-5
        lowered = {key: value.copy() for key, value in params.items()}
        lowered["generators"][1, 7] -= 1e-5
        expected = (training.evaluate(bumped) - training.evaluate(lowered)) / 2e-5
        assert grads["generators"][1, 7] == pytest.approx(expected, rel=1e-5, abs=1e-9)

    def test_alpha_gradient(self, problem):
        training, _, _ = problem
        params = _random_params(2)
        grads = training.gradient(params, 1e-4)
        bumped = {key: value.copy() for key, value in params.items()}
        bumped["alpha"] += 1e-4
        lowered = {key: value.copy() for key, value in params.items()}
        lowered["alpha"] -= 1e-4
        expected = (training.evaluate(bumped) - training.evaluate(lowered)) / 2e-4 - training.alpha_weight
        assert grads["alpha"][0] == pytest.approx(expected, rel=1e-6, abs=1e-9)


class TestTrain:
    def test_history_and_validity(self, example1_pair, short_config):
        result = train(*example1_pair, short_config)
        assert len(result.loss_history) == short_config.epochs + 1
        assert [entry[0] for entry in result.loss_history] == list(range(short_config.epochs + 1))
        for _, loss_o, total in result.loss_history:
            assert loss_o >= 0
            assert total <= loss_o
        assert 0 < result.alpha <= 1
        assert result.channel.weights.sum() == pytest.approx(1.0, abs=1e-12)
        assert result.channel.unitarity_error() <= 1e-10

    def test_deterministic(self, example1_pair, short_config):
        first = train(*example1_pair, short_config)
        second = train(*example1_pair, short_config)
        assert first.loss_history == second.loss_history
        assert first.alpha == second.alpha

    def test_initial_alpha_recorded(self, example1_pair, short_config):
        result = train(*example1_pair, short_config)
        epoch, loss_o, total = result.loss_history[0]
        assert epoch == 0
        assert total == pytest.approx(loss_o - short_config.alpha_init)

    def test_loss_decreases(self, example1_pair):
        config = TrainingConfig(epochs=60, dataset_size_1=30, dataset_size_2=30)
        history = train(*example1_pair, config).loss_history
        assert history[-1][1] < history[0][1]

    def test_zero_epochs(self, example1_pair):
        result = train(*example1_pair, TrainingConfig(epochs=0, dataset_size_1=5, dataset_size_2=5))
        assert len(result.loss_history) == 1
        assert result.alpha == 0.5

    def test_invalid_observables(self, example1_pair):
        with pytest.raises(InvalidObservable):
            train(example1_pair[0], np.diag([0.5, 0.5, 0.5, 0.5]))

    def test_checkpoint_round_trip(self, example1_pair, short_config):
        result = train(*example1_pair, short_config)
        checkpoint = Checkpoint.from_result(result)
        assert checkpoint.epoch == short_config.epochs
        channel = checkpoint.to_channel()
        assert np.array_equal(channel.generator_params, result.channel.generator_params)
        assert np.array_equal(channel.weights, result.channel.weights)

    def test_resume_from_channel(self, example1_pair, short_config):
        first = train(*example1_pair, short_config)
        resumed = train(*example1_pair, short_config, initial=first.channel)
        data1 = generate_dataset(example1_pair[0], short_config.dataset_size_1, short_config.seed, 1)
        data2 = generate_dataset(example1_pair[1], short_config.dataset_size_2, short_config.seed, 2)
        expected = loss(first.channel, short_config.alpha_init, data1, data2)[1]
        assert resumed.loss_history[0][1] == pytest.approx(expected, rel=1e-9)

    def test_result_rejects_bad_history(self, example1_pair, short_config):
        result = train(*example1_pair, short_config)
        with pytest.raises(ValidationError):
            TrainResult(alpha=0.5, loss_history=result.loss_history[:-1], channel=result.channel, config=short_config)


@pytest.mark.slow
class TestTrainConvergence:
    def test_example1(self, example1_pair):
        result = train(*example1_pair, TrainingConfig(d_a=4, epochs=2000, learning_rate=0.05))
        assert result.alpha == pytest.approx(SQRT2_HALF, abs=0.02)
        assert result.final_loss_o <= 1e-4
        readout = adjoint_observable(result.channel, 1)
        assert np.linalg.norm(readout - result.alpha * example1_pair[0].matrix) <= 0.02

    def test_z_pair(self, z_pair):
        assert train(*z_pair, TrainingConfig()).alpha >= 0.98

    @pytest.mark.parametrize("seed", range(10))
    def test_random_pair_reaches_solver_alpha(self, seed):
        pair = random_pair(seed)
        result = train(*pair, TrainingConfig(d_a=4, seed=seed))
        assert abs(result.alpha - iterative_alpha_max(pair).alpha_max) <= 0.02
        assert result.final_loss_o <= 1e-3

    def test_ancilla_dimension_ordering(self):
        finals = {2: [], 4: []}
        for seed in range(5):
            pair = random_pair(seed)
            for d_a in finals:
                finals[d_a].append(train(*pair, TrainingConfig(d_a=d_a, seed=seed)).final_loss_o)
        assert np.median(finals[2]) > np.median(finals[4])

    def test_never_exceeds_solver(self):
        for seed in range(20):
            pair = random_pair(seed)
            trained = train(*pair, TrainingConfig(seed=seed)).alpha
            assert trained <= iterative_alpha_max(pair).alpha_max + 0.02
