"""Clustering-based evaluation of feature rankings.

k-means with k-means++ seeding, clustering accuracy under the best label
matching, accuracy-versus-feature-count curves, and the variation of
information between repeated clusterings.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .dataio import DataMatrix, LabeledDataset
from .ranking import FeatureRanking

log = logging.getLogger(__name__)

DEFAULT_COUNTS = (2, 5, 10, 20, 30, 40, 50, 100, 150, 200, 250, 300)


@dataclass(frozen=True)
class ClusteringResult:
    assignments: np.ndarray
    inertia: float
    restarts_used: int
    inertia_history: tuple[float, ...] = ()


@dataclass(frozen=True)
class AccuracyCurve:
    feature_counts: tuple[int, ...]
    mean_acc: tuple[float, ...]
    std_acc: tuple[float, ...]
    skipped_counts: tuple[int, ...] = ()

    def best(self):
        """(count, mean accuracy) at the highest mean accuracy."""
        if not self.mean_acc:
            raise ValueError("empty curve")
        i = int(np.argmax(self.mean_acc))
        return self.feature_counts[i], self.mean_acc[i]


@dataclass(frozen=True)
class StabilitySummary:
    vi_values: np.ndarray
    mean_vi: float
    std_vi: float


def _values(x):
    return x.values if isinstance(x, DataMatrix) else np.asarray(x, dtype=float)


def _sq_dist_to(v, centers):
    return ((v[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)


def _kmeans_pp(v, k, rng):
    n = v.shape[0]
    centers = np.empty((k, v.shape[1]))
    centers[0] = v[rng.integers(n)]
    closest = ((v - centers[0]) ** 2).sum(axis=1)
    for c in range(1, k):
        total = closest.sum()
        if total <= 0:
            idx = rng.integers(n)
        else:
            idx = int(np.searchsorted(np.cumsum(closest), rng.random() * total, side="right"))
            idx = min(idx, n - 1)
        centers[c] = v[idx]
        closest = np.minimum(closest, ((v - centers[c]) ** 2).sum(axis=1))
    return centers


def _lloyd(v, centers, max_iter):
    k = centers.shape[0]
    labels = None
    history = []
    for _ in range(max_iter):
        d = _sq_dist_to(v, centers)
        new = np.argmin(d, axis=1)
        inertia = float(d[np.arange(len(v)), new].sum())
        history.append(inertia)
        if labels is not None and np.array_equal(new, labels):
            break
        labels = new
        counts = np.bincount(labels, minlength=k)
        for c in range(k):
            if counts[c]:
                centers[c] = v[labels == c].mean(axis=0)
        for c in np.flatnonzero(counts == 0):
            # re-seed an empty cluster at the point farthest from its center
            far = int(np.argmax(d[np.arange(len(v)), labels]))
            centers[c] = v[far]
            labels[far] = c
            d[far, :] = 0.0
    d = _sq_dist_to(v, centers)
    labels = np.argmin(d, axis=1)
    inertia = float(d[np.arange(len(v)), labels].sum())
    history.append(inertia)
    return labels, inertia, history


def kmeans(x, k: int, restarts: int = 1, max_iter: int = 300, rng_seed=0) -> ClusteringResult:
    """Lloyd's algorithm from k-means++ seeds; keeps the lowest-inertia restart."""
    v = _values(x)
    n = v.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"cannot form {k} clusters from {n} points")
    rng = np.random.default_rng(rng_seed)
    best = None
    for _ in range(restarts):
        labels, inertia, history = _lloyd(v, _kmeans_pp(v, k, rng), max_iter)
        if best is None or inertia < best[1]:
            best = (labels, inertia, history)
    return ClusteringResult(best[0], best[1], restarts, tuple(best[2]))


def _contingency(a, b):
    a = np.unique(np.asarray(a), return_inverse=True)[1]
    b = np.unique(np.asarray(b), return_inverse=True)[1]
    table = np.zeros((a.max() + 1, b.max() + 1), dtype=np.int64)
    np.add.at(table, (a, b), 1)
    return table


def clustering_accuracy(pred, truth) -> float:
    """Fraction of points whose cluster maps to their class under the best one-to-one matching."""
    pred = np.asarray(pred).ravel()
    truth = np.asarray(truth).ravel()
    if pred.shape != truth.shape:
        raise ValueError("prediction and truth differ in length")
    if pred.size == 0:
        raise ValueError("empty labelings")
    table = _contingency(pred, truth)
    size = max(table.shape)
    square = np.zeros((size, size), dtype=np.int64)
    square[: table.shape[0], : table.shape[1]] = table
    rows, cols = linear_sum_assignment(square, maximize=True)
    return float(square[rows, cols].sum()) / pred.size


def variation_of_information(c1, c2) -> float:
    """H(c1) + H(c2) - 2 I(c1; c2) in nats."""
    c1 = np.asarray(c1).ravel()
    c2 = np.asarray(c2).ravel()
    if c1.shape != c2.shape:
        raise ValueError("partitions differ in length")
    n = c1.size
    if n == 0:
        raise ValueError("empty partitions")
    joint = _contingency(c1, c2) / n
    p = joint.sum(axis=1)
    q = joint.sum(axis=0)
    nz = joint > 0
    # VI = -sum r (log r/p + log r/q); avoids cancellation between entropies and MI
    r = joint[nz]
    pr = np.broadcast_to(p[:, None], joint.shape)[nz]
    qr = np.broadcast_to(q[None, :], joint.shape)[nz]
    return float(max(-(r * (np.log(r / pr) + np.log(r / qr))).sum(), 0.0))


def _run_seeds(rng_seed, count):
    return np.random.SeedSequence(int(rng_seed)).spawn(count)


def stability_analysis(x_selected, k: int, runs: int = 500, rng_seed=0) -> StabilitySummary:
    """VI between every pair of single-start k-means runs with distinct seeds."""
    if runs < 2:
        raise ValueError("need at least two runs")
    labelings = [kmeans(x_selected, k, restarts=1, rng_seed=s).assignments
                 for s in _run_seeds(rng_seed, runs)]
    vi = np.array([
        variation_of_information(labelings[i], labelings[j])
        for i in range(runs) for j in range(i + 1, runs)
    ])
    std = float(vi.std(ddof=1)) if vi.size > 1 else 0.0
    return StabilitySummary(vi, float(vi.mean()), std)


def accuracy_curve(ds: LabeledDataset, ranking: FeatureRanking, counts=DEFAULT_COUNTS,
                   k: int | None = None, kmeans_runs: int = 20, rng_seed=0,
                   restarts: int = 1) -> AccuracyCurve:
    """Mean and std of k-means accuracy on the top-l features, for each l.

    Counts beyond the number of ranked features are skipped and reported.
    """
    k = ds.num_classes if k is None else k
    available = min(len(ranking.order), ds.data.n_features)
    used, means, stds, skipped = [], [], [], []
    for count in counts:
        if count > available or count < 1:
            log.warning("skipping feature count %d: only %d ranked features", count, available)
            skipped.append(int(count))
            continue
        cols = ranking.order[:count]
        v = ds.data.values[:, cols]
        accs = [clustering_accuracy(kmeans(v, k, restarts=restarts, rng_seed=s).assignments, ds.labels)
                for s in _run_seeds(rng_seed, kmeans_runs)]
        used.append(int(count))
        means.append(float(np.mean(accs)))
        # population std over the runs, as in reporting mean +- std of repeated runs
        stds.append(float(np.std(accs)))
    return AccuracyCurve(tuple(used), tuple(means), tuple(stds), tuple(skipped))
