"""
Per-trial random streams and ordered worker pools.

Every trial owns a generator derived from (master_seed, trial_index, stream),
so results never depend on scheduling or on the number of workers.
"""

import logging
from multiprocessing import Pool
from typing import Callable, Iterable, List, Sequence, TypeVar

import numpy as np

from app.core.exceptions import ParamOutOfRange

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")

# Stream ids keep independent draws of one trial apart
STREAM_NETWORK = 0
STREAM_TREE_PRIMARY = 1
STREAM_TREE_SECONDARY = 2
STREAM_AUXILIARY = 3
STREAM_REFERENCE = 4


def trial_rng(master_seed: int, trial_index: int, stream: int = 0) -> np.random.Generator:
    """Generator for one trial, derived from a SeedSequence entropy triple"""
    if master_seed < 0 or trial_index < 0 or stream < 0:
        raise ParamOutOfRange("seeds, trial indices and streams must be nonnegative")
    return np.random.default_rng(np.random.SeedSequence([master_seed, trial_index, stream]))


def parallel_map(fn: Callable[[T], R], tasks: Iterable[T], workers: int = 1) -> List[R]:
    """Map ``fn`` over ``tasks`` keeping task order; uses a process pool when workers > 1"""
    tasks: Sequence[T] = list(tasks)
    if workers < 1:
        raise ParamOutOfRange(f"workers must be >= 1, got {workers}")
    if workers == 1 or len(tasks) <= 1:
        return [fn(task) for task in tasks]

    logger.debug(f"Dispatching {len(tasks)} tasks to {workers} workers")
    chunksize = max(1, len(tasks) // (workers * 4))
    with Pool(processes=workers) as pool:
        return pool.map(fn, tasks, chunksize=chunksize)
