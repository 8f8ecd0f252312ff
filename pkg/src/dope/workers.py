# Worker pool for independent seeded jobs (runs, seeds, table cells)

import asyncio
import logging
import os
from concurrent.futures import Executor, ProcessPoolExecutor
from typing import Any, Callable, List, Optional, Sequence, Tuple

from .errors import ConfigurationError

logger = logging.getLogger(__name__)

THREADS_ENV = "DOPE_THREADS"

Job = Tuple[Callable[..., Any], tuple]


def max_workers() -> int:
    """Pool size: DOPE_THREADS if set, else the CPU count."""
    value = os.environ.get(THREADS_ENV, "").strip()
    if not value:
        return os.cpu_count() or 1
    try:
        workers = int(value)
    except ValueError:
        raise ConfigurationError(f"{THREADS_ENV} must be a positive integer, got '{value}'") from None
    if workers < 1:
        raise ConfigurationError(f"{THREADS_ENV} must be a positive integer, got '{value}'")
    return workers


async def run_non_blocking(executor: Optional[Executor], func, *args):
    return await asyncio.get_running_loop().run_in_executor(executor, func, *args)


async def _gather(jobs: Sequence[Job], executor: Executor) -> List[Any]:
    return await asyncio.gather(*(run_non_blocking(executor, func, *args) for func, args in jobs), return_exceptions=True)


def _call(func, args: tuple):
    try:
        return func(*args)
    except Exception as ex:
        return ex


def run_jobs(jobs: Sequence[Job], workers: Optional[int] = None, raise_errors: bool = True) -> List[Any]:
    """Run `func(*args)` for every job and return the results in job order.

    Jobs must be picklable (module-level functions). With a single worker they run inline.
    The first failure is re-raised after every job has finished, unless `raise_errors`
    is off, in which case failed jobs leave their exception in the result list.
    """
    jobs = list(jobs)
    if not jobs:
        return []
    workers = min(workers or max_workers(), len(jobs))
    if workers == 1 and raise_errors:
        return [func(*args) for func, args in jobs]

    if workers == 1:
        results = [_call(func, args) for func, args in jobs]
    else:
        logger.info("Running %d jobs on %d workers", len(jobs), workers)
        with ProcessPoolExecutor(max_workers=workers) as executor:
            results = asyncio.run(_gather(jobs, executor))
    failures = [(i, r) for i, r in enumerate(results) if isinstance(r, BaseException)]
    for i, error in failures:
        logger.error("Job %d (%s) failed: %s", i, getattr(jobs[i][0], "__name__", jobs[i][0]), error)
    if failures and raise_errors:
        raise failures[0][1]
    return results
