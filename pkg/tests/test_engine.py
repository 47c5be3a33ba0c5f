"""
Tests for incompat/engine.py
"""

import threading

import pytest

from incompat.config import EngineConfig
from incompat.engine import ComputeEngine

# --- Fixtures ---


@pytest.fixture
def engine():
    """ComputeEngine with four worker threads, disposed after the test."""
    manager = ComputeEngine(EngineConfig(threads=4))
    yield manager
    manager.dispose()


def _thread_name(_: int) -> str:
    return threading.current_thread().name


# --- Test Cases ---


def test_engine_initialization():
    engine = ComputeEngine(EngineConfig(threads=1))
    assert engine.threads == 1
    assert engine.executors == {}


def test_engine_initialization_invalid_config():
    with pytest.raises(TypeError, match="config must be an instance of EngineConfig"):
        ComputeEngine(config={"threads": 2})


def test_map_preserves_order(engine):
    assert engine.map(lambda x: x * x, range(50)) == [x * x for x in range(50)]


def test_single_worker_runs_inline():
    engine = ComputeEngine(EngineConfig(threads=1))
    names = engine.map(_thread_name, range(3))
    assert names == [threading.current_thread().name] * 3
    assert engine.executors == {}


def test_pool_threads_are_named(engine):
    names = engine.map(_thread_name, range(8))
    assert all(name.startswith("incompat") for name in names)


def test_worker_override(engine):
    engine.map(_thread_name, range(4), workers=2)
    assert set(engine.executors) == {2}


def test_executor_caching(engine):
    """executor() creates one pool per worker count and reuses it."""
    first = engine.executor()
    assert engine.executor() is first
    assert engine.executor(2) is not first
    assert set(engine.executors) == {2, 4}


def test_map_propagates_errors(engine, caplog):
    def fail(x: int) -> int:
        if x == 3:
            raise RuntimeError("boom")
        return x

    with pytest.raises(RuntimeError, match="boom"):
        engine.map(fail, range(6))
    assert "Task failed in thread pool" in caplog.text


def test_dispose(engine):
    engine.executor()
    engine.executor(2)
    engine.dispose()
    assert engine.executors == {}


def test_context_manager():
    with ComputeEngine(EngineConfig(threads=2)) as engine:
        assert engine.map(str, [1, 2]) == ["1", "2"]
        assert len(engine.executors) == 1
    assert engine.executors == {}
