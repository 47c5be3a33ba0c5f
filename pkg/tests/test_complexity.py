"""
Tests for incompat/complexity.py
"""

import numpy as np
import pytest
from pydantic import ValidationError

from incompat.choi import build_choi
from incompat.complexity import (
    SWEEP_COLUMNS,
    ComplexityReport,
    analytic_variances,
    bernstein_bounds,
    fig3_sweep,
    identical_observables_report,
    lambda_haar,
    lambda_ratio,
    variance_report,
)
from incompat.config import EngineConfig, SamplingOptions, SolverOptions
from incompat.engine import ComputeEngine
from incompat.errors import DegenerateDenominator, InvalidParameter
from incompat.majorization import majorization_bound
from incompat.operators import Observable, haar_state, make_rng, random_observable
from incompat.presets import fig3_pair
from incompat.qnn import MixedUnitaryChannel
from incompat.sampling import sample_projective, sample_qnn_z
from incompat.solver import iterative_alpha_max

SQRT2_HALF = np.sqrt(2) / 2
TWO_OVER_E = 2 / np.e


def _crossing(ps, ratios):
    """First p where the ratio reaches 1, linearly interpolated between grid points."""
    for (p0, r0), (p1, r1) in zip(zip(ps, ratios), zip(ps[1:], ratios[1:])):
        if r0 < 1 <= r1:
            return p0 + (1 - r0) * (p1 - p0) / (r1 - r0)
    raise AssertionError(f"ratio never crosses 1: {list(ratios)}")


@pytest.fixture(scope="module")
def z1():
    return Observable.from_paulis({"ZI": 1.0}, label="Z1")


class TestAnalyticVariances:
    def test_equality_case(self, z1, mixed_state):
        assert analytic_variances(mixed_state, z1, 1.0) == pytest.approx((1.0, 1.0))

    def test_half_alpha(self, z1, mixed_state):
        assert analytic_variances(mixed_state, z1, 0.5) == pytest.approx((1.0, 4.0))

    def test_z_never_below_o(self):
        rng = make_rng(17)
        for trial in range(1000):
            rho = haar_state(2, trial, 5)
            o = random_observable(2, trial, 5)
            var_o, var_z = analytic_variances(rho, o, rng.uniform(0.05, 1.0))
            assert var_z >= var_o - 1e-12

    def test_z_never_below_o_sampled(self, example1_pair):
        channel = build_choi(example1_pair, 0.7)
        for trial in range(100):
            rho = haar_state(2, trial, 6)
            z_stats = sample_qnn_z(channel, rho, 0.7, 10**5, trial)
            for index, (o, z) in enumerate(zip(example1_pair, z_stats), start=1):
                o_stats = sample_projective(rho, o, 10**5, trial, index)
                slack = 3 * np.hypot(z.variance_stderr, o_stats.variance_stderr)
                assert z.sample_variance >= o_stats.sample_variance - slack

    def test_invalid_alpha(self, z1, mixed_state):
        with pytest.raises(InvalidParameter):
            analytic_variances(mixed_state, z1, 0.0)


class TestLambdaRatio:
    def test_unit_alpha(self, z_pair, mixed_state):
        assert lambda_ratio(mixed_state, *z_pair, 1.0) == pytest.approx(0.5)

    def test_half_alpha(self, z_pair, mixed_state):
        assert lambda_ratio(mixed_state, *z_pair, 0.5) == pytest.approx(2.0)

    def test_decreasing_in_alpha(self):
        rho, o1, o2 = haar_state(2, 1), random_observable(2, 1), random_observable(2, 2)
        values = [lambda_ratio(rho, o1, o2, alpha) for alpha in np.linspace(0.1, 1.0, 10)]
        assert all(later < earlier for earlier, later in zip(values, values[1:]))

    def test_degenerate(self, z_pair, ground_state):
        with pytest.raises(DegenerateDenominator):
            lambda_ratio(ground_state, *z_pair, 1.0)


class TestLambdaHaar:
    def test_commuting_endpoint(self):
        o1, o2 = fig3_pair(0.0)
        assert lambda_haar(o1, o2, 1.0) == pytest.approx(0.5, abs=1e-9)

    def test_example1(self, example1_pair):
        assert lambda_haar(*example1_pair, SQRT2_HALF) == pytest.approx(19 / 12)

    def test_matches_haar_average(self, example1_pair):
        o1, o2 = example1_pair
        d = 4
        t1, t2 = 4.0, 2.0
        expected = (d * (d + 1) - 0.5 * min(t1, t2)) / (d * 0.5 * (t1 + t2))
        assert lambda_haar(o1, o2, SQRT2_HALF) == pytest.approx(expected)

    def test_degenerate(self):
        zero = Observable.from_matrix(np.zeros((4, 4)))
        with pytest.raises(DegenerateDenominator):
            lambda_haar(zero, zero, 1.0)


class TestIdenticalObservables:
    def test_threshold(self, pauli):
        report = identical_observables_report(pauli("ZZ"), 1.0)
        assert report.threshold == pytest.approx(20 / 9)
        assert report.trace_square == pytest.approx(4.0)
        assert report.condition_met
        assert report.lambda_haar < 1

    def test_random_observables_exceed_one(self):
        for seed in range(100):
            o = random_observable(2, seed, 8)
            report = identical_observables_report(o, majorization_bound(o, o))
            assert not report.condition_met
            assert report.lambda_haar > 1


class TestBernsteinBounds:
    def test_closed_form(self, z_pair, mixed_state):
        bounds = bernstein_bounds(*z_pair, mixed_state, 1.0, 0.1, TWO_OVER_E)
        assert bounds.N_O == pytest.approx(400.0)
        assert bounds.N_Z == pytest.approx(200 * (1 + 2 / 3 * 2 * 0.1))
        assert bounds.N_Z == pytest.approx(226.67, abs=0.01)

    def test_small_epsilon_limit(self):
        for seed in range(20):
            rho = haar_state(2, seed, 7)
            o1, o2 = random_observable(2, seed, 7), random_observable(2, seed, 8)
            alpha = 0.5 + 0.5 * make_rng(seed).uniform()
            ratio = bernstein_bounds(o1, o2, rho, alpha, 1e-4, 0.05).ratio
            assert ratio == pytest.approx(lambda_ratio(rho, o1, o2, alpha), rel=0.01)

    @pytest.mark.parametrize("epsilon, delta", [(0.0, 0.1), (1.0, 0.1), (0.1, 0.0), (0.1, 1.0)])
    def test_invalid(self, z_pair, mixed_state, epsilon, delta):
        with pytest.raises(InvalidParameter):
            bernstein_bounds(*z_pair, mixed_state, 1.0, epsilon, delta)


class TestComplexityReport:
    def test_row_columns(self):
        report = ComplexityReport(
            p=0.1, alpha_max=1.0, lambda_haar=0.5, lambda_exp=0.6, n_z=100, n_o=200, trials=3, lambda_state=0.4
        )
        assert set(report.row()) == set(SWEEP_COLUMNS)

    def test_positive_lambda(self):
        with pytest.raises(ValidationError):
            ComplexityReport(p=0.1, alpha_max=1.0, lambda_haar=0.5, lambda_exp=0.0, n_z=1, n_o=1, trials=1)

    def test_trials(self):
        with pytest.raises(ValidationError):
            ComplexityReport(p=0.1, alpha_max=1.0, lambda_haar=0.5, lambda_exp=1.0, n_z=1, n_o=1, trials=0)


class TestFig3Sweep:
    @pytest.fixture(scope="class")
    def options(self):
        """Default solver and a small shot budget."""
        return SolverOptions(), SamplingOptions(max_shots=2**16)

    def test_small_sweep(self, options):
        solver, sampling = options
        reports = fig3_sweep([0.0, 1.0], trials=4, epsilon=0.05, seed=3, solver=solver, sampling=sampling)
        assert [r.p for r in reports] == [0.0, 1.0]
        first = reports[0]
        assert first.alpha_max == 1.0
        assert first.lambda_haar == pytest.approx(0.5, abs=1e-9)
        for report in reports:
            assert report.trials == 4
            assert report.lambda_exp > 0
            assert report.n_z >= 64
            assert report.n_o >= 128

    def test_engine_does_not_change_results(self, options):
        solver, sampling = options
        serial = fig3_sweep([0.5], trials=6, epsilon=0.05, seed=1, solver=solver, sampling=sampling)
        with ComputeEngine(EngineConfig(threads=3)) as engine:
            parallel = fig3_sweep(
                [0.5], trials=6, epsilon=0.05, seed=1, solver=solver, sampling=sampling, engine=engine
            )
        assert serial == parallel

    def test_invalid_inputs(self):
        with pytest.raises(InvalidParameter):
            fig3_sweep([1.5], trials=1, epsilon=0.1, seed=0)
        with pytest.raises(InvalidParameter):
            fig3_sweep([0.5], trials=0, epsilon=0.1, seed=0)

    def test_haar_ratio_brackets_crossing(self):
        ratios = []
        for p in (0.3, 0.6):
            pair = fig3_pair(p)
            ratios.append(lambda_haar(*pair, iterative_alpha_max(pair).alpha_max))
        assert ratios[0] < 1 < ratios[1]

    @pytest.mark.slow
    def test_crossing(self):
        low = fig3_sweep([0.0, 0.1, 0.2, 0.3], trials=200, epsilon=0.01, seed=7)
        high = fig3_sweep([0.8, 0.9, 1.0], trials=200, epsilon=0.01, seed=7)
        assert all(report.lambda_exp < 1 for report in low)
        assert all(report.lambda_exp > 1 for report in high)

    @pytest.mark.slow
    def test_crossing_point(self):
        grid = np.round(np.arange(0.0, 1.0001, 0.05), 2)
        reports = fig3_sweep(grid, trials=200, epsilon=0.01, seed=11)
        assert 0.3 <= _crossing(grid, [r.lambda_haar for r in reports]) <= 0.6
        assert 0.3 <= _crossing(grid, [r.lambda_exp for r in reports]) <= 0.6


class TestVarianceReport:
    def test_identity_channel(self, z_pair, mixed_state):
        report = variance_report(*z_pair, mixed_state, MixedUnitaryChannel.identity(2, 2), 1.0, 2000, 0)
        assert report.var_o == pytest.approx([1.0, 1.0])
        assert report.var_z == pytest.approx([1.0, 1.0])
        assert report.lambda_state == pytest.approx(0.5)
        assert len(report.projective) == 2
        assert len(report.qnn_z) == 2
        assert str(report).startswith("VarianceReport(alpha=1.000000")

    def test_degenerate_lambda_is_none(self, z_pair, ground_state):
        report = variance_report(*z_pair, ground_state, MixedUnitaryChannel.identity(2, 2), 1.0, 100, 0)
        assert report.lambda_state is None
        assert report.dump_model()["bernstein"]["N_O"] > 0
