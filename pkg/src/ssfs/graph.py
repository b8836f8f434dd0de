"""Affinity graphs, graph Laplacians and their smallest eigenpairs."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse.linalg

from .dataio import DataMatrix

log = logging.getLogger(__name__)

UNNORMALIZED = "unnormalized"
SYMMETRIC = "symmetric-normalized"
LAPLACIAN_VARIANTS = (UNNORMALIZED, SYMMETRIC)

DENSE_LIMIT = 4000
DEGENERATE_GAP = 1e-10


class DegenerateMetricError(ValueError):
    pass


@dataclass(frozen=True)
class AffinityGraph:
    weights: np.ndarray
    degrees: np.ndarray
    bandwidth_mode: str  # "fixed" or "adaptive"


@dataclass(frozen=True)
class SpectralBasis:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    laplacian_variant: str
    degenerate_gap: bool = False
    # sqrt of node degrees; the trivial vector of the normalized Laplacian is proportional to it
    sqrt_degrees: np.ndarray | None = None

    @property
    def size(self) -> int:
        return len(self.eigenvalues)


def _as_array(x):
    return x.values if isinstance(x, DataMatrix) else np.asarray(x, dtype=float)


def pairwise_sq_distances(x, max_block_elems: int = 1 << 24) -> np.ndarray:
    """Squared Euclidean distances between all rows.

    Computed from explicit differences in row blocks, so the result is exactly
    symmetric with an exact zero diagonal.
    """
    v = _as_array(x)
    n, p = v.shape
    block_rows = max(1, max_block_elems // max(n * p, 1))
    d2 = np.empty((n, n))
    for start in range(0, n, block_rows):
        stop = min(start + block_rows, n)
        diff = v[start:stop, None, :] - v[None, :, :]
        d2[start:stop] = np.einsum("ijk,ijk->ij", diff, diff)
    return d2


def adaptive_bandwidths(d2, neighbor_k: int = 2) -> np.ndarray:
    """Per-point scale: distance to the `neighbor_k`-th nearest other point.

    A point whose scale comes out 0 (duplicates) falls back to its smallest
    positive distance to any other point.
    """
    d2 = np.asarray(d2, dtype=float)
    n = d2.shape[0]
    if not 1 <= neighbor_k < n:
        raise ValueError(f"neighbor_k must be in [1, {n - 1}], got {neighbor_k}")
    off = d2.copy()
    np.fill_diagonal(off, np.inf)
    kth = np.partition(off, neighbor_k - 1, axis=1)[:, neighbor_k - 1]
    sigma = np.sqrt(kth)
    zero = sigma <= 0
    if np.any(zero):
        positive = np.where(off > 0, off, np.inf).min(axis=1)
        if np.any(~np.isfinite(positive[zero])):
            raise DegenerateMetricError("degenerate metric: a point has no distinct neighbor")
        sigma[zero] = np.sqrt(positive[zero])
    return sigma


def gaussian_affinity(d2, bandwidths) -> AffinityGraph:
    """Gaussian kernel weights.

    A scalar bandwidth gives exp(-d2 / 2 sigma^2); a per-point vector gives
    the adaptive form exp(-d2 / 2 sigma_i sigma_j).
    """
    d2 = np.asarray(d2, dtype=float)
    sigma = np.asarray(bandwidths, dtype=float)
    if np.any(sigma <= 0) or not np.all(np.isfinite(sigma)):
        raise ValueError("bandwidths must be positive and finite")
    if sigma.ndim == 0:
        scale = 2.0 * float(sigma) ** 2
        mode = "fixed"
    else:
        if sigma.shape != (d2.shape[0],):
            raise ValueError("need one bandwidth per point")
        scale = 2.0 * np.outer(sigma, sigma)
        mode = "adaptive"
    w = np.exp(-d2 / scale)
    w = 0.5 * (w + w.T)
    np.fill_diagonal(w, 1.0)
    return AffinityGraph(weights=w, degrees=w.sum(axis=1), bandwidth_mode=mode)


def build_graph(x, bandwidth=None, neighbor_k: int = 2) -> AffinityGraph:
    """Adaptive kernel by default; pass a scalar `bandwidth` for a fixed one."""
    d2 = pairwise_sq_distances(x)
    if bandwidth is None:
        return gaussian_affinity(d2, adaptive_bandwidths(d2, neighbor_k))
    return gaussian_affinity(d2, float(bandwidth))


def laplacian(g: AffinityGraph, variant: str = SYMMETRIC) -> np.ndarray:
    w, deg = g.weights, g.degrees
    if np.any(deg <= 0):
        raise ValueError("graph has a zero-degree node")
    if variant == UNNORMALIZED:
        lap = np.diag(deg) - w
    elif variant == SYMMETRIC:
        inv_sqrt = 1.0 / np.sqrt(deg)
        lap = np.eye(len(deg)) - inv_sqrt[:, None] * w * inv_sqrt[None, :]
    else:
        raise ValueError(f"unknown Laplacian variant {variant!r}")
    return 0.5 * (lap + lap.T)


def canonical_signs(vectors: np.ndarray) -> np.ndarray:
    """Flip each column so its largest-magnitude entry is positive (first one on ties)."""
    vectors = np.array(vectors, dtype=float, copy=True)
    if vectors.size == 0:
        return vectors
    pivot = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[pivot, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def smallest_eigenpairs(lap, d: int, variant: str = SYMMETRIC, sqrt_degrees=None) -> SpectralBasis:
    """The `d` algebraically smallest eigenpairs, ascending, with canonical signs."""
    lap = np.asarray(lap, dtype=float)
    n = lap.shape[0]
    if not 1 <= d <= n:
        raise ValueError(f"cannot extract {d} eigenpairs from a {n}x{n} matrix")
    # one extra pair lets us detect a degenerate gap after the d-th value
    want = min(d + 1, n)
    if n <= DENSE_LIMIT:
        vals, vecs = scipy.linalg.eigh(lap, subset_by_index=[0, want - 1])
    else:
        rng = np.random.default_rng(0)
        vals, vecs = scipy.sparse.linalg.eigsh(
            lap, k=want, which="SA", tol=1e-8, maxiter=10 * n, v0=rng.standard_normal(n)
        )
        order = np.argsort(vals, kind="stable")
        vals, vecs = vals[order], vecs[:, order]
    degenerate = want > d and abs(vals[d] - vals[d - 1]) <= DEGENERATE_GAP
    if degenerate:
        log.warning("eigenvalues %d and %d coincide; eigenvector choice is arbitrary", d, d + 1)
    vecs = vecs[:, :d] / np.linalg.norm(vecs[:, :d], axis=0)
    return SpectralBasis(
        eigenvalues=vals[:d].copy(),
        eigenvectors=canonical_signs(vecs),
        laplacian_variant=variant,
        degenerate_gap=bool(degenerate),
        sqrt_degrees=None if sqrt_degrees is None else np.asarray(sqrt_degrees, dtype=float),
    )


def spectral_basis(x, d: int, variant: str = SYMMETRIC, bandwidth=None,
                   neighbor_k: int = 2) -> SpectralBasis:
    """Graph construction plus eigendecomposition in one call."""
    g = build_graph(x, bandwidth=bandwidth, neighbor_k=neighbor_k)
    sqrt_deg = np.sqrt(g.degrees) if variant == SYMMETRIC else None
    return smallest_eigenpairs(laplacian(g, variant), d, variant, sqrt_deg)


def laplacian_score(x, lap) -> np.ndarray:
    """Rayleigh quotient of each centered, unit-norm feature with `lap`.

    Lower is smoother. Constant features get +inf.
    """
    v = _as_array(x)
    lap = np.asarray(lap, dtype=float)
    if v.shape[0] != lap.shape[0]:
        raise ValueError("feature length does not match the Laplacian size")
    centered = v - v.mean(axis=0)
    norms = np.linalg.norm(centered, axis=0)
    scale = np.maximum(np.abs(v).max(axis=0), 1.0)
    constant = norms <= 1e-12 * scale * np.sqrt(v.shape[0])
    scores = np.full(v.shape[1], np.inf)
    live = ~constant
    f = centered[:, live] / norms[live]
    scores[live] = np.einsum("ij,ij->j", f, lap @ f)
    return scores
