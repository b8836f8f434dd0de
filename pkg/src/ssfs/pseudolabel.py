"""Binary pseudo-labels from Laplacian eigenvectors via exact 1-D 2-medoids."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graph import SpectralBasis

TRIVIAL_RANGE = 1e-6


class ConstantEigenvectorError(ValueError):
    pass


@dataclass(frozen=True)
class PseudoLabelSet:
    labels: np.ndarray  # d x n, entries in {0, 1}
    medoids: np.ndarray  # d x 2, ascending per row
    source_eigenvalues: np.ndarray
    source_indices: tuple[int, ...]  # column of the SpectralBasis each row came from
    eigenvectors: np.ndarray  # n x d, the continuous vectors behind each label row
    excluded: tuple[int, ...] = ()
    dropped_trivial: bool = False

    def __len__(self):
        return self.labels.shape[0]


def _run_costs(s, prefix, starts, stops):
    """L1 cost of each sorted run s[a:b] around its lower median; vectorized over runs."""
    mid = starts + (stops - starts - 1) // 2
    med = s[mid]
    below = med * (mid - starts) - (prefix[mid] - prefix[starts])
    above = (prefix[stops] - prefix[mid + 1]) - med * (stops - mid - 1)
    return below + above, med


def _assign(v, m0, m1):
    d0 = np.abs(v - m0)
    d1 = np.abs(v - m1)
    labels = (d1 < d0).astype(np.int8)  # ties go to the lower medoid
    return labels, float(np.minimum(d0, d1).sum())


def kmedoids_1d(v):
    """Globally optimal 2-medoid partition of a 1-D sample under absolute loss.

    Optimal clusters are contiguous in sorted order and the best medoid of a
    contiguous run is its (lower) median, so scanning every split point is
    exact. Returns (labels, (m0, m1), cost) with m0 < m1 and label 1 for the
    points nearer m1.
    """
    v = np.asarray(v, dtype=float).ravel()
    n = v.size
    if n < 2 or np.all(v == v[0]):
        raise ConstantEigenvectorError("constant eigenvector: need two distinct values")
    s = np.sort(v, kind="stable")
    prefix = np.concatenate(([0.0], np.cumsum(s)))
    t = np.arange(1, n)
    zeros = np.zeros_like(t)
    left, m0 = _run_costs(s, prefix, zeros, t)
    right, m1 = _run_costs(s, prefix, t, np.full_like(t, n))
    total = left + right
    total[m0 == m1] = np.inf

    # prefix-sum costs carry rounding error; settle near-ties with direct sums
    best = total.min()
    slack = 1e-9 * (np.abs(s - s[(n - 1) // 2]).sum() + np.finfo(float).tiny)
    best_key = None
    for j in np.flatnonzero(total <= best + slack):
        labels, cost = _assign(v, m0[j], m1[j])
        key = (cost, m0[j], m1[j])
        if best_key is None or key < best_key[0]:
            best_key = (key, labels)
    (cost, lo, hi), labels = best_key
    return labels, (float(lo), float(hi)), cost


def is_trivial(vector, sqrt_degrees=None) -> bool:
    """True when the vector is constant, or proportional to sqrt-degrees."""
    w = np.asarray(vector, dtype=float)
    if sqrt_degrees is not None:
        w = w / sqrt_degrees
    scale = np.abs(w).max()
    if scale == 0:
        return True
    w = w / scale
    return float(w.max() - w.min()) < TRIVIAL_RANGE


def binarize_basis(basis: SpectralBasis, skip_trivial: bool = True) -> PseudoLabelSet:
    vecs = basis.eigenvectors
    columns = list(range(basis.size))
    dropped = False
    if skip_trivial and columns and is_trivial(vecs[:, 0], basis.sqrt_degrees):
        columns = columns[1:]
        dropped = True

    labels, medoids, kept, excluded = [], [], [], []
    for c in columns:
        try:
            y, pair, _ = kmedoids_1d(vecs[:, c])
        except ConstantEigenvectorError:
            excluded.append(c)
            continue
        labels.append(y)
        medoids.append(pair)
        kept.append(c)
    if not kept:
        raise ValueError("no usable eigenvectors to binarize")
    return PseudoLabelSet(
        labels=np.vstack(labels),
        medoids=np.asarray(medoids),
        source_eigenvalues=basis.eigenvalues[kept].copy(),
        source_indices=tuple(kept),
        eigenvectors=vecs[:, kept].copy(),
        excluded=tuple(excluded),
        dropped_trivial=dropped,
    )


def subset(pl: PseudoLabelSet, rows) -> PseudoLabelSet:
    """Restrict a label set to the given rows (in that order)."""
    rows = [int(r) for r in rows]
    return PseudoLabelSet(
        labels=pl.labels[rows],
        medoids=pl.medoids[rows],
        source_eigenvalues=pl.source_eigenvalues[rows],
        source_indices=tuple(pl.source_indices[r] for r in rows),
        eigenvectors=pl.eigenvectors[:, rows],
        excluded=pl.excluded,
        dropped_trivial=pl.dropped_trivial,
    )
