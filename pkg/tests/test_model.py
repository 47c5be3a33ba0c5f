"""
Tests for incompat/model.py
"""

import numpy as np
import pytest

from incompat import __version__
from incompat.model import RecordModel


class Sample(RecordModel):
    name: str
    count: int = 0
    values: np.ndarray | None = None


def test_dump_model_real_array():
    record = Sample(name="a", values=np.array([1.0, 2.5]))
    assert record.dump_model() == {"name": "a", "count": 0, "values": [1.0, 2.5]}


def test_dump_model_complex_array():
    record = Sample(name="b", values=np.array([[1 + 2j, 0], [0, -1j]]))
    assert record.dump_model()["values"] == [[[1.0, 2.0], [0.0, 0.0]], [[0.0, 0.0], [-0.0, -1.0]]]


def test_dump_model_numpy_scalars():
    record = Sample(name="c", count=3, values=np.array([np.float64(0.5)], dtype=np.float32))
    assert record.dump_model(fields={"count", "values"}) == {"count": 3, "values": [0.5]}


def test_with_meta():
    meta = Sample(name="d").dump_model(with_meta=True)["__metadata__"]
    assert meta == {"model": f"{__name__}:Sample", "version": __version__}


def test_load_ignores_unknown_keys():
    record = Sample.load({"name": "e", "count": 2, "__metadata__": {}, "extra": 1})
    assert record.name == "e"
    assert record.count == 2


def test_load_rejects_non_dict():
    with pytest.raises(TypeError, match="Expected a dict"):
        Sample.load([("name", "f")])


def test_str_lists_scalar_fields():
    assert str(Sample(name="g", count=4)) == "Sample(name='g', count=4)"
