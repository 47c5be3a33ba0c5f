"""
Provides the thread-pool manager used for independent trials and batch solves.
"""

import logging
from collections.abc import Callable, Iterable
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Self

from incompat.config import EngineConfig

logger = logging.getLogger(__name__)


class ComputeEngine:
    """
    Manages cached executors keyed by worker count.

    `map` preserves input order, so every aggregate computed from its result is
    independent of the number of workers. With a single worker the calls run
    inline on the calling thread.
    """

    config: EngineConfig
    executors: dict[int, ThreadPoolExecutor]

    def __init__(self, config: EngineConfig | None = None):
        config = config or EngineConfig()
        if not isinstance(config, EngineConfig):
            raise TypeError("config must be an instance of EngineConfig")
        self.config = config
        self.executors = {}
        logger.debug(f"Initializing ComputeEngine with config: {config}")

    @property
    def threads(self) -> int:
        return self.config.threads

    def executor(self, workers: int | None = None) -> ThreadPoolExecutor:
        """Retrieves or creates the executor for `workers` threads (defaults to the configured count)."""
        workers = workers or self.threads
        if workers not in self.executors:
            logger.info(f"Creating thread pool with {workers} worker(s)")
            self.executors[workers] = ThreadPoolExecutor(max_workers=workers, thread_name_prefix="incompat")
        else:
            logger.debug(f"Reusing thread pool with {workers} worker(s)")
        return self.executors[workers]

    def map[T, R](self, fn: Callable[[T], R], items: Iterable[T], workers: int | None = None) -> list[R]:
        """Apply `fn` to every item and return the results in input order."""
        workers = workers or self.threads
        if workers <= 1:
            return [fn(item) for item in items]
        try:
            return list(self.executor(workers).map(fn, items))
        except Exception as e:
            logger.error(f"Task failed in thread pool with {workers} worker(s): {e}", exc_info=True)
            raise

    def dispose(self) -> None:
        """Shut down every managed executor."""
        logger.info("Disposing all managed thread pools...")
        count = len(self.executors)
        for workers, executor in self.executors.items():
            logger.debug(f"Shutting down thread pool with {workers} worker(s)")
            executor.shutdown(wait=True)
        self.executors.clear()
        logger.info(f"Disposed {count} thread pool(s).")

    def __enter__(self) -> Self:
        return self

    def __exit__(self, *exc: Any) -> None:
        self.dispose()
