"""Stability-based eigenvector selection.

For each pseudo-label vector a surrogate is refit on B random subsamples; the
summed per-feature variance of its normalized scores measures how unstable
the vector is as a supervision signal. The k most stable vectors are kept.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import surrogate
from .dataio import DataMatrix
from .pseudolabel import PseudoLabelSet
from .surrogate import SurrogateSpec

MAX_REDRAWS = 100


class ResampleError(RuntimeError):
    pass


@dataclass(frozen=True)
class StabilityReport:
    per_vector_variance_sum: np.ndarray
    selected: tuple[int, ...]
    resample_count: int
    subsample_fraction: float
    per_feature_variances: np.ndarray | None = None


def derive_seed(master_seed, *path) -> np.random.SeedSequence:
    """Independent child stream for a (vector, resample, attempt) address."""
    return np.random.SeedSequence(entropy=int(master_seed), spawn_key=tuple(int(p) for p in path))


def subsample_size(n: int, fraction: float) -> int:
    return math.ceil(fraction * n - 1e-9)


def subsample_indices(n: int, fraction: float, rng_seed) -> np.ndarray:
    if not 0 < fraction <= 1:
        raise ValueError(f"subsample fraction must be in (0, 1], got {fraction}")
    size = subsample_size(n, fraction)
    if size < 2:
        raise ValueError(f"subsample of {size} points is too small")
    if size == n:
        return np.arange(n)
    rng = np.random.default_rng(rng_seed)
    return np.sort(rng.choice(n, size=size, replace=False))


def sample_variance(score_matrix) -> np.ndarray:
    """Per-column variance with the (B - 1) denominator."""
    s = np.asarray(score_matrix, dtype=float)
    if s.shape[0] < 2:
        raise ValueError("need at least two resamples")
    return s.var(axis=0, ddof=1)


def _resample_scores(v, y, spec, fraction, seed, vector_index, b):
    n = v.shape[0]
    for attempt in range(MAX_REDRAWS):
        idx = subsample_indices(n, fraction, derive_seed(seed, vector_index, b, attempt))
        yb = y[idx]
        if spec.is_classifier and (yb.min() == yb.max()):
            continue
        model = surrogate.fit(v[idx], yb, spec)
        return surrogate.feature_scores(model)
    raise ResampleError(
        f"eigenvector {vector_index}: every one of {MAX_REDRAWS} subsamples held a single class"
    )


def _map(fn, items, threads):
    if threads is None or threads <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def score_variances(x, y, spec: SurrogateSpec, b: int, fraction: float, rng_seed,
                    vector_index: int = 0, threads: int | None = None) -> np.ndarray:
    """Variance of each feature's normalized score across `b` subsample refits."""
    if b < 2:
        raise ValueError("need at least two resamples")
    v = x.values if isinstance(x, DataMatrix) else np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    rows = _map(lambda i: _resample_scores(v, y, spec, fraction, rng_seed, vector_index, i),
                range(b), threads)
    return sample_variance(np.vstack(rows))


def rank_by_stability(variance_sums, eigenvalues, k: int) -> tuple[int, ...]:
    """Indices of the k smallest sums; ties by smaller eigenvalue, then index."""
    variance_sums = np.asarray(variance_sums, dtype=float)
    order = np.lexsort((np.arange(len(variance_sums)), np.asarray(eigenvalues), variance_sums))
    return tuple(int(i) for i in order[:k])


def select_eigenvectors(x, pl: PseudoLabelSet, k: int, spec: SurrogateSpec, b: int = 500,
                        fraction: float = 0.95, rng_seed=0, threads: int | None = None,
                        continuous: bool = False, keep_feature_variances: bool = True) -> StabilityReport:
    """Keep the k pseudo-label vectors whose surrogate scores vary least.

    With `continuous`, the raw eigenvectors are the targets (regression
    surrogates) instead of the binary labels.
    """
    d = len(pl)
    if not 1 <= k <= d:
        raise ValueError(f"cannot select {k} of {d} pseudo-label vectors")
    if b < 2:
        raise ValueError("need at least two resamples")
    v = x.values if isinstance(x, DataMatrix) else np.asarray(x, dtype=float)
    targets = pl.eigenvectors.T if continuous else pl.labels.astype(float)

    # each (vector, resample) pair owns its seed, so the schedule cannot change results
    jobs = [(i, bi) for i in range(d) for bi in range(b)]
    rows = _map(lambda job: _resample_scores(v, targets[job[0]], spec, fraction, rng_seed, *job),
                jobs, threads)
    scores = np.asarray(rows).reshape(d, b, -1)
    variances = np.stack([sample_variance(scores[i]) for i in range(d)])
    sums = variances.sum(axis=1)
    return StabilityReport(
        per_vector_variance_sum=sums,
        selected=rank_by_stability(sums, pl.source_eigenvalues, k),
        resample_count=b,
        subsample_fraction=fraction,
        per_feature_variances=variances if keep_feature_variances else None,
    )
