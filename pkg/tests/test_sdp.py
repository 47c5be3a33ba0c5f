"""
Tests for incompat/sdp.py
"""

import numpy as np
import pytest

from incompat.choi import beta_support, build_choi
from incompat.errors import DegenerateBasis, DimensionMismatch
from incompat.operators import Observable, make_rng
from incompat.sdp import SdpProblem, export_sdp, orthogonal_complement
from incompat.solver import iterative_alpha_max

SQRT2_HALF = np.sqrt(2) / 2


# --- Fixtures ---
@pytest.fixture(scope="module")
def example1_problem(example1_pair):
    """Exported SDP of example 1."""
    return export_sdp(example1_pair)


@pytest.fixture(scope="module")
def random_beta():
    """Small coefficients on the full admissible support for two observables on two qubits."""
    rng = make_rng(5)
    return {key: 0.01 * rng.standard_normal() for key in beta_support(2, 2, "full")}


# --- Problem shape ---
def test_constraint_count(example1_problem):
    assert example1_problem.psd_dim == 16
    assert len(example1_problem.constraints) == 62
    assert example1_problem.objective.shape == (16, 16)
    assert all(c.matrix.shape == (16, 16) for c in example1_problem.constraints)


def test_constraint_labels(example1_problem):
    labels = [c.label for c in example1_problem.constraints]
    assert labels[0] == "trace"
    assert sum(label.startswith("unital:") for label in labels) == 15
    assert sum(label.startswith("trace-preserving:") for label in labels) == 15
    assert sum(label.startswith("complement:") for label in labels) == 30
    assert labels[-1] == "ratio:1:2"


def test_trace_constraint(example1_problem):
    trace = example1_problem.constraints[0]
    assert trace.rhs == 16.0
    assert np.array_equal(trace.matrix, np.eye(16))


def test_summary(example1_problem):
    assert str(example1_problem) == "SdpProblem(n=2, psd_dim=16, constraints=62)"


# --- Feasibility of built Choi matrices ---
def test_objective_is_alpha(example1_pair, example1_problem):
    for alpha in (0.1, 0.5, SQRT2_HALF):
        assert example1_problem.objective_value(build_choi(example1_pair, alpha)) == pytest.approx(alpha, abs=1e-12)


def test_certificate_objective(example1_pair, example1_problem):
    result = iterative_alpha_max(example1_pair)
    certificate = result.certificate(example1_pair)
    assert example1_problem.objective_value(certificate) == pytest.approx(result.alpha_max, abs=1e-12)
    assert np.max(np.abs(example1_problem.residuals(certificate))) <= 1e-10


def test_residuals_vanish_with_beta(example2_pair, random_beta):
    problem = export_sdp(example2_pair)
    choi = build_choi(example2_pair, 0.4, random_beta)
    assert np.max(np.abs(problem.residuals(choi))) <= 1e-10
    assert problem.objective_value(choi) == pytest.approx(0.4, abs=1e-12)


def test_residuals_detect_wrong_scaling(example1_pair, example1_problem):
    """Different scalings on the two observables break the cross-ratio constraint."""
    o1 = example1_pair[0]
    skewed = build_choi(example1_pair, 0.5).dense + 0.05 * np.kron(o1.matrix, np.diag([1, 1, -1, -1]))
    residuals = example1_problem.residuals(skewed)
    assert abs(residuals[-1]) > 1e-3


def test_residual_shape_mismatch(example1_problem):
    with pytest.raises(DimensionMismatch):
        example1_problem.objective_value(np.eye(4))


def test_problem_holds_arrays():
    problem = SdpProblem(n=1, psd_dim=4, objective=np.zeros((4, 4)))
    assert problem.constraints == []
    assert problem.residuals(np.eye(4)).size == 0


# --- Orthogonal complement ---
def test_orthogonal_complement(example2_pair):
    o = example2_pair[1]
    basis = orthogonal_complement(o)
    assert len(basis) == 15
    gram = np.array([[np.vdot(a, b) for b in basis] for a in basis])
    assert np.allclose(gram, np.eye(15), atol=1e-12)
    assert all(abs(np.vdot(o.matrix, element)) <= 1e-12 for element in basis)
    assert all(np.allclose(element, element.conj().T) for element in basis)


def test_complement_of_single_pauli(z_pair):
    basis = orthogonal_complement(z_pair[0])
    assert len(basis) == 15
    assert all(abs(np.trace(element @ z_pair[0].matrix)) <= 1e-12 for element in basis)


def test_zero_observable():
    with pytest.raises(DegenerateBasis):
        orthogonal_complement(Observable.from_matrix(np.zeros((4, 4))))
