"""Order-preserving process pool used by sweeps and Doppler quadrature."""

import logging
import multiprocessing
from collections.abc import Callable, Iterable
from typing import TypeVar

from tripod.config import get_settings

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def resolve_workers(max_workers: int | None) -> int:
    """Worker count from the argument, falling back to settings."""
    workers = get_settings().max_workers if max_workers is None else max_workers
    if workers < 1:
        raise ValueError(f"max_workers must be at least 1, got {workers}")
    return workers


def map_ordered(
    fn: Callable[[T], R],
    items: Iterable[T],
    max_workers: int | None = None,
) -> list[R]:
    """
    Apply fn to every item, in parallel when more than one worker is allowed.

    Results come back in input order regardless of completion order, so
    reductions over them are deterministic.

    Args:
        fn: Module-level (picklable) function.
        items: Inputs; each must be picklable.
        max_workers: Upper bound on worker processes; None uses settings.

    Returns:
        List of results aligned with items.
    """
    work = list(items)
    workers = min(resolve_workers(max_workers), len(work))
    if workers <= 1:
        return [fn(item) for item in work]

    logger.debug(f"Mapping {len(work)} tasks over {workers} worker processes")
    with multiprocessing.Pool(processes=workers) as pool:
        return pool.map(fn, work, chunksize=1)
