"""
Plain-text file formats: observables, SDP exports and training checkpoints.

Floats are printed with ``repr`` (shortest round-trip form), so every writer
followed by its reader reproduces the data bit for bit.

Observable file::

    obs n=2
    0.0+0.0i 0.0+0.0i 0.0+0.0i 1.0+0.0i
    ...                                   (2^n rows of 2^n entries)

SDP file::

    sdp n=2 dim=16 constraints=62
    C
    <re> <im>                             (dim^2 lines, row-major)
    A 1 b=16.0 label=trace
    <re> <im>
    ...

Checkpoint file: ``key=value`` lines for n, d_a, epoch, alpha, logits,
generator_shape and generator_params (whitespace-separated, row-major).
"""

import logging
import math
import re
from collections.abc import Iterator
from pathlib import Path

import numpy as np

from incompat.errors import ParseError
from incompat.operators import Observable
from incompat.sdp import SdpConstraint, SdpProblem
from incompat.training import Checkpoint

logger = logging.getLogger(__name__)

_NUMBER = r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?|[+-]?(?:inf|nan)"
_ENTRY = re.compile(rf"^(?P<re>{_NUMBER})(?:(?P<im>[+-](?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?|[+-](?:inf|nan))i)?$")
_OBS_HEADER = re.compile(r"^obs\s+n=(?P<n>\d+)$")
_SDP_HEADER = re.compile(r"^sdp\s+n=(?P<n>\d+)\s+dim=(?P<dim>\d+)\s+constraints=(?P<m>\d+)$")
_SDP_BLOCK = re.compile(rf"^A\s+(?P<k>\d+)\s+b=(?P<b>{_NUMBER})(?:\s+label=(?P<label>\S+))?$")


def _numbered(text: str) -> Iterator[tuple[int, str]]:
    """Non-blank lines with their 1-based line numbers."""
    for number, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped:
            yield number, stripped


def _next(lines: Iterator[tuple[int, str]], what: str, last: int) -> tuple[int, str]:
    try:
        return next(lines)
    except StopIteration:
        raise ParseError(f"unexpected end of file, expected {what}", last + 1) from None


def _float(token: str, line: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise ParseError(f"invalid number {token!r}", line) from None


# --- Observables ---
def format_entry(value: complex) -> str:
    sign = "-" if math.copysign(1.0, value.imag) < 0 else "+"
    return f"{value.real!r}{sign}{abs(value.imag)!r}i"


def parse_entry(token: str, line: int) -> complex:
    match = _ENTRY.match(token)
    if not match:
        raise ParseError(f"invalid matrix entry {token!r}, expected re+imi", line)
    imag = float(match["im"]) if match["im"] else 0.0
    return complex(float(match["re"]), imag)


def format_observable(observable: Observable) -> str:
    rows = [" ".join(format_entry(complex(v)) for v in row) for row in observable.matrix]
    return "\n".join([f"obs n={observable.n}", *rows]) + "\n"


def write_observable(observable: Observable, path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_observable(observable), encoding="utf-8")
    return path


def read_observable(text: str, label: str = "") -> Observable:
    """
    Parse the observable format and validate the operator.

    Raises:
        ParseError: malformed header, row or entry (with its line number).
        InvalidObservable: the parsed matrix violates an Observable invariant.
    """
    lines = _numbered(text)
    number, header = _next(lines, "header 'obs n=<n>'", 0)
    match = _OBS_HEADER.match(header)
    if not match:
        raise ParseError(f"invalid header {header!r}, expected 'obs n=<n>'", number)
    n = int(match["n"])
    if n < 1:
        raise ParseError("qubit count must be >= 1", number)
    dim = 2**n
    matrix = np.empty((dim, dim), dtype=complex)
    for row in range(dim):
        number, line = _next(lines, f"matrix row {row + 1} of {dim}", number)
        tokens = line.split()
        if len(tokens) != dim:
            raise ParseError(f"row {row + 1} has {len(tokens)} entries, expected {dim}", number)
        matrix[row] = [parse_entry(token, number) for token in tokens]
    extra = next(lines, None)
    if extra is not None:
        raise ParseError(f"unexpected content after {dim} rows: {extra[1]!r}", extra[0])
    return Observable(n=n, matrix=matrix, label=label)


def load_observable_file(path: Path | str) -> Observable:
    path = Path(path)
    logger.debug("loading observable from %s", path)
    return read_observable(path.read_text(encoding="utf-8"), label=path.name)


# --- SDP exports ---
def _format_block(matrix: np.ndarray) -> list[str]:
    return [f"{value.real!r} {value.imag!r}" for value in map(complex, np.asarray(matrix, dtype=complex).ravel())]


def format_sdp(problem: SdpProblem) -> str:
    lines = [f"sdp n={problem.n} dim={problem.psd_dim} constraints={len(problem.constraints)}", "C"]
    lines += _format_block(problem.objective)
    for k, constraint in enumerate(problem.constraints, start=1):
        label = f" label={constraint.label}" if constraint.label else ""
        lines.append(f"A {k} b={constraint.rhs!r}{label}")
        lines += _format_block(constraint.matrix)
    return "\n".join(lines) + "\n"


def write_sdp(problem: SdpProblem, path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_sdp(problem), encoding="utf-8")
    logger.info("wrote SDP with %d constraints to %s", len(problem.constraints), path)
    return path


def _read_block(lines: Iterator[tuple[int, str]], dim: int, last: int) -> tuple[np.ndarray, int]:
    values = np.empty(dim * dim, dtype=complex)
    for position in range(dim * dim):
        last, line = _next(lines, f"entry {position + 1} of {dim * dim}", last)
        tokens = line.split()
        if len(tokens) != 2:
            raise ParseError(f"expected 're im', got {line!r}", last)
        values[position] = complex(_float(tokens[0], last), _float(tokens[1], last))
    return values.reshape(dim, dim), last


def read_sdp(text: str) -> SdpProblem:
    lines = _numbered(text)
    number, header = _next(lines, "sdp header", 0)
    match = _SDP_HEADER.match(header)
    if not match:
        raise ParseError(f"invalid header {header!r}", number)
    n, dim, count = int(match["n"]), int(match["dim"]), int(match["m"])
    number, line = _next(lines, "'C'", number)
    if line != "C":
        raise ParseError(f"expected 'C', got {line!r}", number)
    objective, number = _read_block(lines, dim, number)
    constraints = []
    for k in range(1, count + 1):
        number, line = _next(lines, f"constraint {k}", number)
        block = _SDP_BLOCK.match(line)
        if not block or int(block["k"]) != k:
            raise ParseError(f"expected 'A {k} b=<rhs>', got {line!r}", number)
        matrix, number = _read_block(lines, dim, number)
        constraints.append(SdpConstraint(label=block["label"] or "", matrix=matrix, rhs=float(block["b"])))
    extra = next(lines, None)
    if extra is not None:
        raise ParseError(f"unexpected content after {count} constraints", extra[0])
    return SdpProblem(n=n, psd_dim=dim, objective=objective, constraints=constraints)


def load_sdp_file(path: Path | str) -> SdpProblem:
    return read_sdp(Path(path).read_text(encoding="utf-8"))


# --- Training checkpoints ---
def _floats(values: np.ndarray) -> str:
    return " ".join(repr(float(v)) for v in np.asarray(values).ravel())


def format_checkpoint(checkpoint: Checkpoint) -> str:
    generators = np.asarray(checkpoint.generator_params)
    fields = {
        "n": str(checkpoint.n),
        "d_a": str(checkpoint.d_a),
        "epoch": str(checkpoint.epoch),
        "alpha": repr(float(checkpoint.alpha)),
        "logits": _floats(checkpoint.weight_logits),
        "generator_shape": " ".join(str(s) for s in generators.shape),
        "generator_params": _floats(generators),
    }
    return "".join(f"{key}={value}\n" for key, value in fields.items())


def write_checkpoint(checkpoint: Checkpoint, path: Path | str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_checkpoint(checkpoint), encoding="utf-8")
    return path


def read_checkpoint(text: str) -> Checkpoint:
    values: dict[str, tuple[int, str]] = {}
    for number, line in _numbered(text):
        key, sep, value = line.partition("=")
        if not sep:
            raise ParseError(f"expected key=value, got {line!r}", number)
        values[key.strip()] = (number, value.strip())
    required = ("n", "d_a", "epoch", "alpha", "logits", "generator_shape", "generator_params")
    for key in required:
        if key not in values:
            raise ParseError(f"missing key {key!r}", len(text.splitlines()) + 1)

    def integers(key: str) -> list[int]:
        number, raw = values[key]
        try:
            return [int(token) for token in raw.split()]
        except ValueError:
            raise ParseError(f"invalid integer in {key}", number) from None

    def floats(key: str) -> np.ndarray:
        number, raw = values[key]
        return np.array([_float(token, number) for token in raw.split()], dtype=float)

    def scalar(key: str) -> int:
        parsed = integers(key)
        if len(parsed) != 1:
            raise ParseError(f"{key} must hold one integer", values[key][0])
        return parsed[0]

    shape = tuple(integers("generator_shape"))
    generators = floats("generator_params")
    if int(np.prod(shape)) != generators.size:
        line = values["generator_params"][0]
        raise ParseError(f"generator_params has {generators.size} values for shape {shape}", line)
    return Checkpoint(
        n=scalar("n"),
        d_a=scalar("d_a"),
        epoch=scalar("epoch"),
        alpha=float(floats("alpha")[0]),
        weight_logits=floats("logits"),
        generator_params=generators.reshape(shape),
    )


def load_checkpoint_file(path: Path | str) -> Checkpoint:
    return read_checkpoint(Path(path).read_text(encoding="utf-8"))
