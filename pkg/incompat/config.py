# pylint: disable=no-self-argument
import logging
import os
from pathlib import Path
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator

logger: logging.Logger = logging.getLogger("incompat")

THREADS_ENV = "INCOMPAT_THREADS"


class BaseConfig(BaseModel):
    model_config = ConfigDict(extra="allow", validate_assignment=False)


class SolverOptions(BaseConfig):
    """
    Options shared by the iterative and penalty alpha solvers.

    The ground-space window used by the iterative solver is
    ``max(degeneracy_tol, cluster_factor * eta)``: after a finite beta step the
    formerly degenerate ground levels split by O(eta) and must still be treated
    as one cluster.
    """

    eta: float = Field(default=0.01, gt=0)
    min_eta: float = Field(default=1e-9, gt=0)
    max_iterations: int = Field(default=500, ge=1)
    window: int = Field(default=10, ge=1)
    tolerance: float = Field(default=1e-6, ge=0)
    degeneracy_tol: float = Field(default=1e-8, gt=0)
    cluster_factor: float = Field(default=0.1, ge=0)
    lambda_floor: float = Field(default=-1e-8, ge=-1e-8, le=0)
    support: Literal["diagonal", "full"] = Field(default="diagonal")
    rescan: bool = Field(default=True)
    polish: bool = Field(default=True)
    delta_alpha: float = Field(default=1e-3, gt=0)
    max_delta_alpha: float = Field(default=0.05, gt=0)
    min_delta_alpha: float = Field(default=1e-6, gt=0)
    inner_maxiter: int = Field(default=200, ge=1)
    temperatures: tuple[float, ...] = Field(default=(1e2, 1e3, 1e4, 1e5))
    bisection_tol: float = Field(default=1e-10, gt=0)

    def ground_window(self, eta: float | None = None) -> float:
        step = self.eta if eta is None else eta
        return max(self.degeneracy_tol, self.cluster_factor * step)


class TrainingConfig(BaseConfig):
    """
    Hyperparameters of a mixed-unitary training run.

    `alpha_weight` scales the -alpha reward in the optimized objective; the
    reported loss always uses the unit weight.
    """

    d_a: int = Field(default=4)
    epochs: int = Field(default=2000, ge=0)
    learning_rate: float = Field(default=0.05)
    dataset_size_1: int = Field(default=100, ge=1)
    dataset_size_2: int = Field(default=100, ge=1)
    fd_step: float = Field(default=1e-4)
    seed: int = Field(default=0, ge=0)
    alpha_init: float = Field(default=0.5, gt=0, le=1)
    alpha_weight: float = Field(default=0.004, ge=0)
    lr_decay: float = Field(default=0.998, gt=0, le=1)
    init_scale: float = Field(default=0.1, ge=0)
    beta1: float = Field(default=0.9, ge=0, lt=1)
    beta2: float = Field(default=0.999, ge=0, lt=1)
    epsilon: float = Field(default=1e-8, gt=0)

    @field_validator("d_a")
    def check_d_a(cls, value: int) -> int:
        if value < 2:
            raise ValueError(f"d_a must be >= 2, got {value}")
        return value

    @field_validator("learning_rate")
    def check_learning_rate(cls, value: float) -> float:
        if value <= 0:
            raise ValueError(f"learning_rate must be > 0, got {value}")
        return value

    @field_validator("fd_step")
    def check_fd_step(cls, value: float) -> float:
        if not 0 < value <= 1e-2:
            raise ValueError(f"fd_step must lie in (0, 1e-2], got {value}")
        return value


class SamplingOptions(BaseConfig):
    max_shots: int = Field(default=2**22, ge=1)
    first_checkpoint: int = Field(default=64, ge=1)
    eigen_tol: float = Field(default=1e-9, gt=0)


def _threads_from_env() -> int:
    raw = os.environ.get(THREADS_ENV, "")
    if not raw:
        return 1
    try:
        threads = int(raw)
    except ValueError:
        logger.warning("Ignoring non-integer %s=%r", THREADS_ENV, raw)
        return 1
    return max(1, threads)


class EngineConfig(BaseConfig):
    threads: int = Field(default_factory=_threads_from_env, ge=1)


class SweepConfig(BaseConfig):
    p_values: list[float] = Field(default_factory=lambda: [round(0.05 * i, 12) for i in range(21)])
    trials: int = Field(default=1000, ge=1)
    epsilon: float = Field(default=0.01, gt=0)
    seed: int = Field(default=0, ge=0)
    solver: SolverOptions = Field(default_factory=SolverOptions)
    sampling: SamplingOptions = Field(default_factory=SamplingOptions)

    @field_validator("p_values")
    def check_p_values(cls, values: list[float]) -> list[float]:
        for p in values:
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"p values must lie in [0, 1], got {p}")
        return values


class RunConfig(BaseConfig):
    command: Literal["alpha-solve", "train", "variance", "sweep", "majorization", "export-sdp"]
    preset: str | None = Field(default=None)
    obs_files: list[Path] = Field(default_factory=list)
    seed: int = Field(default=0, ge=0)
    out: Path | None = Field(default=None)
    options: dict[str, float | int | str | bool] = Field(default_factory=dict)
