import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence, TypeVar

from ringlab.config import settings

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def worker_count(jobs: int, max_workers: Optional[int] = None) -> int:
    cap = max_workers if max_workers is not None else settings.RINGLAB_THREADS
    return max(1, min(cap, jobs))


def run_jobs(job: Callable[[T], R], items: Sequence[T], max_workers: Optional[int] = None) -> List[R]:
    """
    Run independent jobs on a thread pool

    Args:
        job: callable applied to every item
        items: job inputs
        max_workers: thread cap, RINGLAB_THREADS when omitted

    Returns:
        Results in input order, whatever the completion order
    """
    if not items:
        return []
    workers = worker_count(len(items), max_workers)
    logger.debug(f"Running {len(items)} jobs on {workers} threads")
    if workers == 1:
        return [job(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(job, items))
