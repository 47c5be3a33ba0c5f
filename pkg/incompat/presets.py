"""Named observable pairs used by the experiments and the command line."""

import logging
import re

from incompat.errors import InvalidParameter, UnknownPreset
from incompat.operators import Observable, random_observable

logger = logging.getLogger(__name__)

ObservablePair = tuple[Observable, Observable]

_FIG3 = re.compile(r"^fig3:p=(?P<p>[-+0-9.eE]+)$")
_RANDOM = re.compile(r"^random:seed=(?P<seed>\d+)$")


def example1() -> ObservablePair:
    """(X1X2, (Z1 + Z2)/2); alpha_max = sqrt(2)/2."""
    return (
        Observable.from_paulis({"XX": 1.0}, label="X1X2"),
        Observable.from_paulis({"ZI": 0.5, "IZ": 0.5}, label="(Z1+Z2)/2"),
    )


def example2() -> ObservablePair:
    """((Z1 + Z2)/2, (X1X2 - X1Z2 + Y2)/3)."""
    return (
        Observable.from_paulis({"ZI": 0.5, "IZ": 0.5}, label="(Z1+Z2)/2"),
        Observable.from_paulis({"XX": 1 / 3, "XZ": -1 / 3, "IY": 1 / 3}, label="(X1X2-X1Z2+Y2)/3"),
    )


def fig3_pair(p: float) -> ObservablePair:
    """(O1(p), X1X2) with O1(p) = (1 - p) Z1Z2 + (p/2)(Z1 + Z2), p in [0, 1]."""
    if not 0.0 <= p <= 1.0:
        raise InvalidParameter(f"p must lie in [0, 1], got {p}")
    o1 = Observable.from_paulis({"ZZ": 1.0 - p, "ZI": p / 2, "IZ": p / 2}, label=f"O1(p={p:g})")
    return o1, Observable.from_paulis({"XX": 1.0}, label="X1X2")


def random_pair(seed: int, n: int = 2) -> ObservablePair:
    """Two independent GUE-normalized observables drawn from one seed."""
    return random_observable(n, seed, 1), random_observable(n, seed, 2)


def resolve_preset(name: str) -> ObservablePair:
    """
    Resolve ``example1``, ``example2``, ``fig3:p=<x>`` or ``random:seed=<s>``.

    Raises:
        UnknownPreset: for any other name or a malformed parameter.
    """
    name = name.strip()
    if name == "example1":
        return example1()
    if name == "example2":
        return example2()
    if match := _FIG3.match(name):
        try:
            return fig3_pair(float(match["p"]))
        except (ValueError, InvalidParameter) as e:
            raise UnknownPreset(f"invalid preset {name!r}: {e}") from e
    if match := _RANDOM.match(name):
        return random_pair(int(match["seed"]))
    logger.debug("unknown preset %r", name)
    raise UnknownPreset(f"unknown preset {name!r}; expected example1, example2, fig3:p=<x> or random:seed=<s>")
