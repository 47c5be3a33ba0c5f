__version__ = "0.1.0"

from incompat.choi import ChoiMatrix, build_choi, check_cp, check_unital_tp, solve_alpha_zero_beta  # noqa: E402
from incompat.complexity import (  # noqa: E402
    BernsteinBounds,
    ComplexityReport,
    analytic_variances,
    bernstein_bounds,
    fig3_sweep,
    identical_observables_report,
    lambda_haar,
    lambda_ratio,
)
from incompat.config import SamplingOptions, SolverOptions, SweepConfig, TrainingConfig  # noqa: E402
from incompat.engine import ComputeEngine  # noqa: E402
from incompat.errors import IncompatError  # noqa: E402
from incompat.majorization import majorization_bound  # noqa: E402
from incompat.operators import DensityMatrix, Observable, PauliString  # noqa: E402
from incompat.qnn import MixedUnitaryChannel, apply_channel, generate_dataset, loss  # noqa: E402
from incompat.sampling import EstimatorStats, copies_to_accuracy, sample_projective, sample_qnn_z  # noqa: E402
from incompat.sdp import SdpProblem, export_sdp  # noqa: E402
from incompat.solver import AlphaResult, iterative_alpha_max, penalty_alpha_max  # noqa: E402
from incompat.training import TrainResult, train  # noqa: E402

__all__ = [
    "AlphaResult",
    "BernsteinBounds",
    "ChoiMatrix",
    "ComplexityReport",
    "ComputeEngine",
    "DensityMatrix",
    "EstimatorStats",
    "IncompatError",
    "MixedUnitaryChannel",
    "Observable",
    "PauliString",
    "SamplingOptions",
    "SdpProblem",
    "SolverOptions",
    "SweepConfig",
    "TrainResult",
    "TrainingConfig",
    "analytic_variances",
    "apply_channel",
    "bernstein_bounds",
    "build_choi",
    "check_cp",
    "check_unital_tp",
    "copies_to_accuracy",
    "export_sdp",
    "fig3_sweep",
    "generate_dataset",
    "identical_observables_report",
    "iterative_alpha_max",
    "lambda_haar",
    "lambda_ratio",
    "loss",
    "majorization_bound",
    "penalty_alpha_max",
    "sample_projective",
    "sample_qnn_z",
    "solve_alpha_zero_beta",
    "train",
]
