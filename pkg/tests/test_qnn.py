"""
Tests for incompat/qnn.py
"""

import numpy as np
import pytest
from pydantic import ValidationError

from incompat.errors import DimensionMismatch, EmptyDataset
from incompat.operators import DensityMatrix, PauliString, expectation, haar_state, make_rng
from incompat.qnn import (
    UNITARITY_TOL,
    LabeledState,
    MixedUnitaryChannel,
    adjoint_observable,
    apply_channel,
    generate_dataset,
    generator_count,
    loss,
    unitary_from_params,
)


def _x1_channel(d_a: int = 2) -> MixedUnitaryChannel:
    """Every unitary is exp(-i pi/2 X_1) = -i X_1."""
    params = np.zeros((d_a, generator_count(2)))
    params[:, PauliString("XI").index - 1] = np.pi / 2
    return MixedUnitaryChannel(n=2, d_a=d_a, weight_logits=np.zeros(d_a), generator_params=params)


@pytest.fixture
def random_channel():
    return MixedUnitaryChannel.random(2, 4, make_rng(3), scale=0.5)


@pytest.fixture(scope="module")
def z_datasets(z_pair):
    """Labeled Z1 and Z2 datasets of 50 states each."""
    return generate_dataset(z_pair[0], 50, 0, 1), generate_dataset(z_pair[1], 50, 0, 2)


class TestUnitaryFromParams:
    def test_zero_is_identity(self):
        assert np.allclose(unitary_from_params(np.zeros(15)), np.eye(4))

    def test_single_qubit_z(self):
        theta = np.zeros(3)
        theta[2] = np.pi / 2
        assert np.allclose(unitary_from_params(theta), np.diag([np.exp(-1j * np.pi / 2), np.exp(1j * np.pi / 2)]))

    def test_random_is_unitary(self):
        rng = make_rng(7)
        for _ in range(20):
            u = unitary_from_params(rng.standard_normal(15))
            assert np.linalg.norm(u.conj().T @ u - np.eye(4)) <= UNITARITY_TOL
            assert np.allclose(np.abs(np.linalg.eigvals(u)), 1.0, atol=1e-10)

    def test_bad_length(self):
        with pytest.raises(DimensionMismatch):
            unitary_from_params(np.zeros(14))
        with pytest.raises(DimensionMismatch):
            unitary_from_params(np.zeros(15), n=1)


class TestMixedUnitaryChannel:
    def test_weights_on_simplex(self, random_channel):
        assert np.all(random_channel.weights >= 0)
        assert random_channel.weights.sum() == pytest.approx(1.0, abs=1e-12)
        assert random_channel.unitarity_error() <= UNITARITY_TOL

    def test_softmax_weights(self):
        channel = MixedUnitaryChannel(
            n=2, d_a=2, weight_logits=[0.0, np.log(3.0)], generator_params=np.zeros((2, 15))
        )
        assert np.allclose(channel.weights, [0.25, 0.75])

    def test_shape_mismatch(self):
        with pytest.raises(DimensionMismatch):
            MixedUnitaryChannel(n=2, d_a=3, weight_logits=np.zeros(2), generator_params=np.zeros((3, 15)))
        with pytest.raises(DimensionMismatch):
            MixedUnitaryChannel(n=2, d_a=2, weight_logits=np.zeros(2), generator_params=np.zeros((2, 14)))
        with pytest.raises(DimensionMismatch):
            MixedUnitaryChannel(n=2, d_a=2, weight_logits=np.zeros(2), generator_params=np.zeros(30))

    def test_parameters_read_only(self, random_channel):
        with pytest.raises(ValueError):
            random_channel.generator_params[0, 0] = 1.0


class TestApplyChannel:
    def test_identity_channel(self):
        rho = haar_state(2, 5)
        out = apply_channel(MixedUnitaryChannel.identity(2, 3), rho)
        assert np.allclose(out.matrix, rho.matrix, atol=1e-12)

    def test_unital(self, random_channel):
        out = apply_channel(random_channel, DensityMatrix.maximally_mixed(2))
        assert np.allclose(out.matrix, np.eye(4) / 4, atol=1e-12)

    def test_x1_flips_first_qubit(self):
        out = apply_channel(_x1_channel(), DensityMatrix.basis("00"))
        assert np.allclose(out.matrix, DensityMatrix.basis("10").matrix, atol=1e-12)

    def test_output_is_state(self, random_channel):
        out = apply_channel(random_channel, haar_state(2, 8))
        assert isinstance(out, DensityMatrix)
        assert out.trace().real == pytest.approx(1.0, abs=1e-12)

    def test_dimension_mismatch(self, random_channel):
        with pytest.raises(DimensionMismatch):
            apply_channel(random_channel, DensityMatrix.basis("0"))


class TestAdjointObservable:
    def test_identity_channel(self, pauli):
        assert np.allclose(adjoint_observable(MixedUnitaryChannel.identity(2, 2), 1), pauli("ZI"))

    def test_x1_channel(self, pauli):
        assert np.allclose(adjoint_observable(_x1_channel(), 1), -pauli("ZI"), atol=1e-12)
        assert np.allclose(adjoint_observable(_x1_channel(), 2), pauli("IZ"), atol=1e-12)

    def test_valid_observable(self, random_channel):
        readout = adjoint_observable(random_channel, 2)
        assert np.allclose(readout, readout.conj().T)
        assert abs(np.trace(readout)) < 1e-12
        assert np.max(np.abs(np.linalg.eigvalsh(readout))) <= 1 + 1e-12

    def test_duality(self, random_channel, pauli):
        for seed in range(10):
            rho = haar_state(2, seed, 4)
            for j, z in ((1, pauli("ZI")), (2, pauli("IZ"))):
                left = expectation(apply_channel(random_channel, rho), z)
                right = expectation(rho, adjoint_observable(random_channel, j))
                assert left == pytest.approx(right, abs=1e-10)


class TestGenerateDataset:
    def test_deterministic(self, example1_pair):
        first = generate_dataset(example1_pair[0], 5, 3)
        second = generate_dataset(example1_pair[0], 5, 3)
        assert [item.target for item in first] == [item.target for item in second]
        assert [item.target for item in first] != [item.target for item in generate_dataset(example1_pair[0], 5, 4)]

    def test_labels_exact_and_bounded(self, example2_pair):
        for item in generate_dataset(example2_pair[1], 100, 1):
            assert -1.0 <= item.target <= 1.0
            assert item.target == pytest.approx(expectation(item.rho, example2_pair[1]), abs=1e-15)
            assert item.rho.purity() == pytest.approx(1.0, abs=1e-10)

    def test_mean_label(self, z_pair):
        targets = np.array([item.target for item in generate_dataset(z_pair[0], 10_000, 0)])
        assert abs(targets.mean()) < 0.02

    def test_ground_state_label(self, z_pair):
        item = LabeledState(rho=DensityMatrix.basis("00"), target=expectation(DensityMatrix.basis("00"), z_pair[0]))
        assert item.target == 1.0

    def test_empty(self, z_pair):
        with pytest.raises(EmptyDataset):
            generate_dataset(z_pair[0], 0, 0)

    def test_target_bound(self):
        with pytest.raises(ValidationError):
            LabeledState(rho=DensityMatrix.basis("00"), target=1.5)


class TestLoss:
    def test_identity_channel_on_z_data(self, z_datasets):
        total, loss_o = loss(MixedUnitaryChannel.identity(2, 2), 1.0, *z_datasets)
        assert loss_o == pytest.approx(0.0, abs=1e-24)
        assert total == pytest.approx(-1.0)

    def test_alpha_zero(self, random_channel, z_datasets, pauli):
        total, loss_o = loss(random_channel, 0.0, *z_datasets)
        expected = sum(
            np.mean([expectation(apply_channel(random_channel, item.rho), z) ** 2 for item in data])
            for data, z in zip(z_datasets, (pauli("ZI"), pauli("IZ")))
        )
        assert loss_o == pytest.approx(expected, rel=1e-10)
        assert total == loss_o

    def test_permutation_invariant(self, random_channel, z_datasets):
        data1, data2 = z_datasets
        assert loss(random_channel, 0.7, data1, data2)[1] == pytest.approx(
            loss(random_channel, 0.7, data1[::-1], data2[::-1])[1], rel=1e-12
        )

    def test_empty(self, random_channel, z_datasets):
        with pytest.raises(EmptyDataset):
            loss(random_channel, 0.5, [], z_datasets[1])
