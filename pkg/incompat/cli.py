"""
Command-line entry point.

Every command takes its observables from ``--preset`` or from the pair
``--obs1``/``--obs2`` of observable files, writes its record to ``--out`` and
prints a one-line summary. `run` maps failures to exit codes: 2 for usage
errors, 1 for domain errors (reported by error class name).
"""

import logging
import sys
from collections.abc import Sequence
from enum import StrEnum
from pathlib import Path
from typing import Annotated

import typer
from pydantic import ValidationError
from rich.logging import RichHandler

from incompat.choi import ChoiMatrix, build_choi, solve_alpha_zero_beta
from incompat.complexity import SWEEP_COLUMNS, ComplexityReport, VarianceReport, fig3_sweep, variance_report
from incompat.config import EngineConfig, RunConfig, SamplingOptions, SolverOptions, TrainingConfig
from incompat.engine import ComputeEngine
from incompat.errors import IncompatError, UnknownPreset
from incompat.formats import load_observable_file, write_checkpoint, write_sdp
from incompat.majorization import MajorizationReport, majorization_report
from incompat.model import RecordModel
from incompat.operators import DensityMatrix, Observable, haar_state
from incompat.presets import resolve_preset
from incompat.repository import SUFFIXES, RecordRepository
from incompat.sdp import export_sdp
from incompat.solver import AlphaResult, iterative_alpha_max, penalty_alpha_max
from incompat.training import Checkpoint, TrainResult, train
from incompat.version import VersionInfo

logger = logging.getLogger(__name__)

app = typer.Typer(
    name="incompat",
    help="Unital channels that read incompatible observables from Pauli-Z measurements.",
    add_completion=False,
    no_args_is_help=True,
)

PresetOption = Annotated[
    str | None,
    typer.Option("--preset", help="example1, example2, fig3:p=<x> or random:seed=<s>."),
]
Obs1Option = Annotated[Path | None, typer.Option("--obs1", help="File holding the first observable.")]
Obs2Option = Annotated[Path | None, typer.Option("--obs2", help="File holding the second observable.")]
SeedOption = Annotated[int, typer.Option("--seed", help="Seed of every random stream.")]


def _check_out(value: Path | None) -> Path | None:
    if value is not None and value.suffix not in SUFFIXES:
        raise typer.BadParameter(f"unsupported suffix {value.suffix!r}; expected one of {', '.join(SUFFIXES)}")
    return value


OutOption = Annotated[
    Path | None,
    typer.Option("--out", "-o", help="Output path (.json, .jsonl or .csv).", callback=_check_out),
]


class Strategy(StrEnum):
    ITERATIVE = "iterative"
    PENALTY = "penalty"


class Support(StrEnum):
    DIAGONAL = "diagonal"
    FULL = "full"


@app.callback()
def main_callback(
    verbose: Annotated[bool, typer.Option("--verbose", "-v", help="Log progress to stderr.")] = False,
) -> None:
    if verbose:
        logging.basicConfig(
            level=logging.DEBUG,
            format="%(message)s",
            handlers=[RichHandler(rich_tracebacks=False, show_path=False)],
            force=True,
        )


def _observables(preset: str | None, obs1: Path | None, obs2: Path | None) -> list[Observable]:
    if preset is not None and (obs1 is not None or obs2 is not None):
        raise typer.BadParameter("use either --preset or --obs1/--obs2, not both", param_hint="--preset")
    if preset is not None:
        return list(resolve_preset(preset))
    if obs1 is None or obs2 is None:
        raise typer.BadParameter("both --obs1 and --obs2 are required without --preset", param_hint="--obs1/--obs2")
    return [load_observable_file(obs1), load_observable_file(obs2)]


def _record(config: RunConfig) -> None:
    logger.debug("run config: %s", config.model_dump(mode="json"))


def _emit[T: RecordModel](record: T, out: Path | None) -> None:
    if out is not None:
        RecordRepository(type(record)).write(out, record)
    typer.echo(str(record))


def parse_p_values(grid: str) -> list[float]:
    """``start:stop:step`` (inclusive) or a comma-separated list."""
    try:
        if ":" in grid:
            start, stop, step = (float(part) for part in grid.split(":"))
            if step <= 0 or stop < start:
                raise ValueError("need step > 0 and stop >= start")
            count = int(round((stop - start) / step)) + 1
            return [round(start + i * step, 12) for i in range(count)]
        return [float(part) for part in grid.split(",") if part.strip()]
    except ValueError as e:
        raise typer.BadParameter(f"invalid p grid {grid!r}: {e}", param_hint="--p") from e


@app.command("alpha-solve")
def alpha_solve(
    preset: PresetOption = None,
    obs1: Obs1Option = None,
    obs2: Obs2Option = None,
    strategy: Annotated[Strategy, typer.Option(help="Solver strategy.")] = Strategy.ITERATIVE,
    eta: Annotated[float, typer.Option(help="Step size along sign directions.")] = 0.01,
    max_iterations: Annotated[int, typer.Option(help="Iteration cap of the iterative strategy.")] = 500,
    support: Annotated[Support, typer.Option(help="Variational beta support.")] = Support.DIAGONAL,
    polish: Annotated[bool, typer.Option(help="Finish the iterative run with a penalty continuation.")] = True,
    seed: SeedOption = 0,
    out: OutOption = None,
) -> None:
    """Compute alpha_max and its Choi certificate."""
    config = RunConfig(
        command="alpha-solve",
        preset=preset,
        obs_files=[p for p in (obs1, obs2) if p],
        seed=seed,
        out=out,
        options={"strategy": strategy.value, "eta": eta, "max_iterations": max_iterations, "support": support.value},
    )
    _record(config)
    observables = _observables(preset, obs1, obs2)
    opts = SolverOptions(eta=eta, max_iterations=max_iterations, support=support.value, polish=polish)
    solve = iterative_alpha_max if strategy is Strategy.ITERATIVE else penalty_alpha_max
    result: AlphaResult = solve(observables, opts)
    logger.info("alpha^(0) = %.9f", solve_alpha_zero_beta(observables))
    _emit(result, out)


@app.command("train")
def train_command(
    preset: PresetOption = None,
    obs1: Obs1Option = None,
    obs2: Obs2Option = None,
    da: Annotated[int, typer.Option("--da", help="Ancilla dimension (number of unitaries).")] = 4,
    epochs: Annotated[int, typer.Option(help="Training epochs.")] = 2000,
    lr: Annotated[float, typer.Option("--lr", help="Adam learning rate.")] = 0.05,
    dataset_size: Annotated[int, typer.Option(help="States per dataset (L = M).")] = 100,
    alpha_weight: Annotated[float, typer.Option(help="Weight of the alpha reward.")] = 0.004,
    checkpoint: Annotated[Path | None, typer.Option(help="Also write a plain-text checkpoint here.")] = None,
    seed: SeedOption = 0,
    out: OutOption = None,
) -> None:
    """Train the mixed-unitary channel on Haar-random labeled states."""
    config = RunConfig(
        command="train",
        preset=preset,
        obs_files=[p for p in (obs1, obs2) if p],
        seed=seed,
        out=out,
        options={"da": da, "epochs": epochs, "lr": lr, "dataset_size": dataset_size},
    )
    _record(config)
    o1, o2 = _observables(preset, obs1, obs2)
    training = TrainingConfig(
        d_a=da,
        epochs=epochs,
        learning_rate=lr,
        dataset_size_1=dataset_size,
        dataset_size_2=dataset_size,
        alpha_weight=alpha_weight,
        seed=seed,
    )
    result: TrainResult = train(o1, o2, training)
    if checkpoint is not None:
        write_checkpoint(Checkpoint.from_result(result), checkpoint)
    _emit(result, out)


@app.command("variance")
def variance(
    preset: PresetOption = None,
    obs1: Obs1Option = None,
    obs2: Obs2Option = None,
    shots: Annotated[int, typer.Option(help="Shots per estimator.")] = 100_000,
    alpha: Annotated[float | None, typer.Option(help="Scaling used; defaults to the solver's alpha_max.")] = None,
    basis: Annotated[str | None, typer.Option(help="Computational basis state, e.g. 01; default Haar random.")] = None,
    epsilon: Annotated[float, typer.Option(help="Bernstein accuracy.")] = 0.01,
    delta: Annotated[float, typer.Option(help="Bernstein failure probability.")] = 0.05,
    seed: SeedOption = 0,
    out: OutOption = None,
) -> None:
    """Compare analytic and sampled estimator variances on one state."""
    config = RunConfig(
        command="variance",
        preset=preset,
        obs_files=[p for p in (obs1, obs2) if p],
        seed=seed,
        out=out,
        options={"shots": shots, "epsilon": epsilon, "delta": delta},
    )
    _record(config)
    o1, o2 = _observables(preset, obs1, obs2)
    result = iterative_alpha_max([o1, o2])
    channel = result.certificate([o1, o2])
    scale = result.alpha_max if alpha is None else alpha
    if not 0.0 < scale <= result.alpha_max + 1e-12:
        raise typer.BadParameter(f"alpha must lie in (0, {result.alpha_max:.9g}]", param_hint="--alpha")
    if alpha is not None:
        channel = _rescaled(o1, o2, result, scale)
    rho = DensityMatrix.basis(basis) if basis else haar_state(o1.n, seed)
    report: VarianceReport = variance_report(o1, o2, rho, channel, scale, shots, seed, epsilon, delta)
    _emit(report, out)


def _rescaled(o1: Observable, o2: Observable, result: AlphaResult, alpha: float) -> ChoiMatrix:
    """Certificate at a smaller alpha: J(s alpha_max, s beta) = (1 - s) I + s J(alpha_max, beta) stays positive."""
    factor = alpha / result.alpha_max
    return build_choi([o1, o2], alpha, {key: factor * value for key, value in result.beta.items()})


@app.command("sweep")
def sweep(
    p: Annotated[str, typer.Option("--p", help="p grid as start:stop:step or a comma-separated list.")] = "0:1:0.05",
    trials: Annotated[int, typer.Option(help="Haar-random states per p.")] = 1000,
    epsilon: Annotated[float, typer.Option(help="Target accuracy of every estimate.")] = 0.01,
    threads: Annotated[int | None, typer.Option(help="Worker threads (default INCOMPAT_THREADS or 1).")] = None,
    max_shots: Annotated[int, typer.Option(help="Largest qualifying shot count.")] = 2**22,
    seed: SeedOption = 0,
    out: OutOption = None,
) -> None:
    """Copy-count ratios over the O1(p), X1X2 family."""
    p_values = parse_p_values(p)
    config = RunConfig(command="sweep", seed=seed, out=out, options={"p": p, "trials": trials, "epsilon": epsilon})
    _record(config)
    engine_config = EngineConfig() if threads is None else EngineConfig(threads=threads)
    with ComputeEngine(engine_config) as engine:
        reports = fig3_sweep(
            p_values, trials, epsilon, seed, sampling=SamplingOptions(max_shots=max_shots), engine=engine
        )
    if out is not None:
        repository = RecordRepository(ComplexityReport)
        fields = SWEEP_COLUMNS if out.suffix in (".csv", ".jsonl") else None
        repository.write(out, reports, fields=fields)
    for report in reports:
        typer.echo(str(report))


@app.command("majorization")
def majorization(
    preset: PresetOption = None,
    obs1: Obs1Option = None,
    obs2: Obs2Option = None,
    directions: Annotated[int, typer.Option(help="Number of grid angles in [0, 2 pi).")] = 360,
    seed: SeedOption = 0,
    out: OutOption = None,
) -> None:
    """Majorization upper bound on alpha."""
    config = RunConfig(
        command="majorization",
        preset=preset,
        obs_files=[p for p in (obs1, obs2) if p],
        seed=seed,
        out=out,
        options={"directions": directions},
    )
    _record(config)
    report: MajorizationReport = majorization_report(_observables(preset, obs1, obs2), directions)
    _emit(report, out)


@app.command("export-sdp")
def export_sdp_command(
    preset: PresetOption = None,
    obs1: Obs1Option = None,
    obs2: Obs2Option = None,
    seed: SeedOption = 0,
    out: Annotated[Path, typer.Option("--out", "-o", help="Output path of the plain-text SDP.")] = Path("problem.sdp"),
) -> None:
    """Export the alpha_max SDP in plain text."""
    config = RunConfig(
        command="export-sdp", preset=preset, obs_files=[p for p in (obs1, obs2) if p], seed=seed, out=out
    )
    _record(config)
    problem = export_sdp(_observables(preset, obs1, obs2))
    write_sdp(problem, out)
    typer.echo(str(problem))


@app.command("version")
def version(
    as_json: Annotated[bool, typer.Option("--json", help="Print the information as JSON.")] = False,
) -> None:
    """Print version information."""
    info = VersionInfo.collect()
    typer.echo(info.model_dump_json(indent=2) if as_json else info.text())


def run(argv: Sequence[str] | None = None) -> int:
    """
    Execute the command line `argv` and return the exit code.

    Usage errors raised while parsing are reported by typer itself and surface
    as its exit status.
    """
    command = typer.main.get_command(app)
    args = list(argv) if argv is not None else sys.argv[1:]
    try:
        command.main(args=args, prog_name="incompat", standalone_mode=True)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else int(e.code is not None)
    except (UnknownPreset, ValidationError) as e:
        typer.echo(f"usage error: {type(e).__name__}: {e}", err=True)
        return 2
    except IncompatError as e:
        typer.echo(f"error: {type(e).__name__}: {e}", err=True)
        return 1
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
