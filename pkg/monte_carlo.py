"""
Monte Carlo Runner
Splits path indices into fixed chunks, runs them in a worker pool and
reassembles results in path order, plus the summary statistics used by the
experiments
"""

from multiprocessing import Pool
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy import stats
from tqdm import tqdm

from config import config


def path_chunks(n_paths: int, chunk_size: Optional[int] = None) -> List[range]:
    """Consecutive index ranges; the split depends only on n_paths and chunk_size"""
    size = chunk_size or config.CHUNK_SIZE
    return [range(start, min(start + size, n_paths)) for start in range(0, n_paths, size)]


def run_paths(task: Callable[[range], np.ndarray], n_paths: int, workers: Optional[int] = None,
              chunk_size: Optional[int] = None, progress: Optional[bool] = None,
              desc: str = "paths") -> np.ndarray:
    """
    Evaluate task on every chunk of path indices

    Args:
        task: picklable callable mapping a range of path indices to an array
              whose first axis runs over those paths
        n_paths: total number of paths
        workers: process count (default CF_WORKERS); never changes the result
        chunk_size: paths per task (default CF_CHUNK_SIZE)
        progress: show a tqdm bar (default CF_SHOW_PROGRESS)
        desc: progress bar label

    Returns:
        Results concatenated in path-index order
    """
    workers = workers or config.WORKERS
    show = config.SHOW_PROGRESS if progress is None else progress
    chunks = path_chunks(n_paths, chunk_size)

    bar = tqdm(total=n_paths, desc=desc, unit="path", disable=not show, leave=False)
    results = []
    try:
        if workers <= 1 or len(chunks) <= 1:
            for chunk in chunks:
                results.append(task(chunk))
                bar.update(len(chunk))
        else:
            with Pool(processes=min(workers, len(chunks))) as pool:
                # imap keeps submission order
                for chunk, result in zip(chunks, pool.imap(task, chunks)):
                    results.append(result)
                    bar.update(len(chunk))
    finally:
        bar.close()
    return np.concatenate([np.asarray(r) for r in results], axis=0)


def z_value(confidence: Optional[float] = None) -> float:
    level = config.CONFIDENCE_LEVEL if confidence is None else confidence
    return float(stats.norm.ppf(0.5 + level / 2.0))


def mean_with_ci(samples, confidence: Optional[float] = None) -> Tuple[float, float]:
    """Sample mean and the normal-approximation confidence half-width"""
    samples = np.asarray(samples, dtype=float)
    n = samples.shape[0]
    mean = float(np.mean(samples))
    if n < 2:
        return mean, float('inf')
    return mean, z_value(confidence) * float(np.std(samples, ddof=1)) / np.sqrt(n)


def rms_with_ci(samples, confidence: Optional[float] = None) -> Tuple[float, float]:
    """
    Root mean square and its confidence half-width

    The half-width of E[X^2] is carried over to sqrt(E[X^2]) by the delta
    method: hw(rms) = hw(mean square) / (2 rms).
    """
    squares = np.asarray(samples, dtype=float) ** 2
    mean_square, half_width = mean_with_ci(squares, confidence)
    rms = float(np.sqrt(mean_square))
    if rms == 0.0:
        return 0.0, 0.0
    return rms, half_width / (2.0 * rms)


def log_log_fit(x, y):
    """Least-squares line through (log x, log y); returns scipy's LinregressResult"""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2 or np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("log-log regression needs at least two strictly positive points")
    return stats.linregress(np.log(x), np.log(y))


def measured_order(steps, errors) -> float:
    """Convergence order: slope of log error against log step"""
    return float(log_log_fit(steps, errors).slope)
