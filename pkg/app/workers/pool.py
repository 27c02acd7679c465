"""Bounded asyncio pool for independent sweep jobs"""
import asyncio
import time
from typing import Any, Callable, Dict, List, Optional, Sequence, TypeVar

from app.core.config import settings
from app.utils.logger import get_logger
from app.utils.metrics import sweep_jobs_in_flight

logger = get_logger("workers.pool")

T = TypeVar("T")


class SweepWorkerPool:
    """Runs blocking jobs in worker threads, at most `max_workers` at a time, keeping submission order"""

    def __init__(self, max_workers: Optional[int] = None):
        self.max_workers = max_workers or settings.SWEEP_WORKERS
        if self.max_workers < 1:
            raise ValueError(f"max_workers must be >= 1, got {self.max_workers}")
        self._processed_count = 0
        self._failed_count = 0
        self._last_error: Optional[BaseException] = None

    async def _run_one(self, semaphore: asyncio.Semaphore, name: str, job: Callable[[], T]) -> T:
        async with semaphore:
            sweep_jobs_in_flight.inc()
            started = time.perf_counter()
            try:
                result = await asyncio.to_thread(job)
                self._processed_count += 1
                logger.debug(f"Job {name} finished in {time.perf_counter() - started:.3f}s")
                return result
            except Exception as e:
                self._failed_count += 1
                self._last_error = e
                logger.error(f"Job {name} failed: {e}")
                raise
            finally:
                sweep_jobs_in_flight.dec()

    async def run(self, jobs: Sequence[tuple]) -> List[Any]:
        """Run (name, callable) pairs concurrently; results come back in input order."""
        semaphore = asyncio.Semaphore(self.max_workers)
        logger.info(f"Running {len(jobs)} jobs on {self.max_workers} workers")
        return list(await asyncio.gather(*(self._run_one(semaphore, name, job) for name, job in jobs)))

    def run_sync(self, jobs: Sequence[tuple]) -> List[Any]:
        return asyncio.run(self.run(jobs))

    def get_stats(self) -> Dict[str, Any]:
        return {
            "processed_count": self._processed_count,
            "failed_count": self._failed_count,
            "last_error": str(self._last_error) if self._last_error else None,
        }
