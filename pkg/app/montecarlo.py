from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
import structlog
from joblib import Parallel, cpu_count, delayed

from app.models import ComplexArray, FloatArray

log = structlog.get_logger()

ChunkFn = Callable[[int, int, int], FloatArray]

_CHUNKS_PER_WORKER = 4


@dataclass(frozen=True)
class TrialStreams:
    channel: np.random.Generator  # RCS then h_AU; N-independent
    symbols: np.random.Generator
    ap_noise: np.random.Generator
    repeater_noise: np.random.Generator
    ue_noise: np.random.Generator


def trial_streams(seed: int, trial: int) -> TrialStreams:
    children = np.random.SeedSequence(seed, spawn_key=(trial,)).spawn(5)
    return TrialStreams(*(np.random.default_rng(child) for child in children))


def complex_normal(rng: np.random.Generator, size: int, variance: float) -> ComplexArray:
    scale = np.sqrt(variance / 2.0)
    return scale * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


def qpsk(rng: np.random.Generator, size: int) -> ComplexArray:
    return np.exp(1j * (np.pi / 4 + np.pi / 2 * rng.integers(0, 4, size)))


def resolve_workers(workers: int) -> int:
    return cpu_count() if workers <= 0 else workers


def chunk_bounds(trials: int, chunks: int) -> list[tuple[int, int]]:
    edges = np.linspace(0, trials, min(chunks, trials) + 1).round().astype(int)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:], strict=True) if b > a]


def run_trials(chunk_fn: ChunkFn, *, seed: int, trials: int, workers: int = 1) -> FloatArray:
    # rows come back in trial order, so any worker count matches a single worker bit for bit
    n_jobs = resolve_workers(workers)
    bounds = chunk_bounds(trials, n_jobs * _CHUNKS_PER_WORKER if n_jobs > 1 else 1)
    log.debug("mc_run", seed=seed, trials=trials, workers=n_jobs, chunks=len(bounds))
    if n_jobs == 1:
        parts = [chunk_fn(seed, start, stop) for start, stop in bounds]
    else:
        parts = Parallel(n_jobs=n_jobs)(
            delayed(chunk_fn)(seed, start, stop) for start, stop in bounds
        )
    return np.concatenate(parts, axis=0)
