import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, Sequence, TypeVar

import numpy as np

from ..config import Config

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def parallel_map(func: Callable[[T], R], items: Sequence[T], threads: Optional[int] = None) -> List[R]:
    """Apply func to every item; results come back in input order regardless of completion order.

    LAPACK calls release the GIL, so a thread pool keeps all cores busy on the
    batched solves without copying generators between processes.
    """
    threads = Config.THREADS if threads is None else threads
    if threads <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(threads, len(items))) as executor:
        return list(executor.map(func, items))


def map_chunks(
    func: Callable[[np.ndarray], np.ndarray],
    values: np.ndarray,
    chunk_size: Optional[int] = None,
    threads: Optional[int] = None,
) -> np.ndarray:
    """Evaluate a vectorized func over values in chunks and stack the results along axis 0."""
    values = np.asarray(values)
    chunk_size = Config.BATCH_SIZE if chunk_size is None else max(int(chunk_size), 1)
    if values.shape[0] == 0:
        raise ValueError("map_chunks needs at least one value")
    chunks = [values[start:start + chunk_size] for start in range(0, values.shape[0], chunk_size)]
    logger.debug("Evaluating %d values in %d chunks", values.shape[0], len(chunks))
    return np.concatenate(parallel_map(func, chunks, threads), axis=0)
