"""Synthetic datasets and spectral probes.

Blob-plus-nuisance data for feature-recovery experiments, uniform samples on
an interval for eigenvector convergence, and product-of-manifold data where
every feature is a smooth function of one latent variable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr

from .dataio import DataMatrix, default_names
from .graph import SpectralBasis
from .ranking import FeatureRanking

GAUSSIAN_BLOCKS = "gaussian-blocks"
LAPLACE_COPULA = "laplace-copula"
NUISANCE_KINDS = (GAUSSIAN_BLOCKS, LAPLACE_COPULA)

N_INFORMATIVE = 5
MAX_POLY_REDRAWS = 100


@dataclass(frozen=True)
class SyntheticDataset:
    data: DataMatrix
    true_labels: np.ndarray
    informative_features: tuple[int, ...]
    generator_params: dict


@dataclass(frozen=True)
class ManifoldSample:
    data: DataMatrix
    latents: np.ndarray  # n x H, iid uniform on [0, 1]
    feature_owner: np.ndarray  # latent index for each column
    generator_params: dict


def block_covariance(num_features: int, num_blocks: int = 3, within: float = 0.5,
                     across: float = 0.01, diagonal: float = 1.0) -> np.ndarray:
    """Equal-size blocks: `within` inside a block, `across` between blocks."""
    if num_blocks < 1 or num_features % num_blocks:
        raise ValueError(f"{num_features} nuisance features do not split into {num_blocks} equal blocks")
    block = np.arange(num_features) // (num_features // num_blocks)
    cov = np.where(block[:, None] == block[None, :], within, across)
    np.fill_diagonal(cov, diagonal)
    return cov


def laplace_from_normal(z):
    """Push standard normals through the unit-scale Laplace quantile function.

    Uses the normal log-survival function so the tails stay accurate.
    """
    z = np.asarray(z, dtype=float)
    a = np.abs(z)
    return np.sign(z) * -(np.log(2.0) + log_ndtr(-a))


def gen_blobs_with_nuisance(n: int = 500, nuisance: str = GAUSSIAN_BLOCKS, num_nuisance: int = 45,
                            rng_seed=0, num_blocks: int = 3, within: float = 0.5,
                            across: float = 0.01, cluster_std: float = 1.0,
                            center_box=(-10.0, 10.0)) -> SyntheticDataset:
    """Two isotropic Gaussian blobs in 5 features plus correlated nuisance features.

    Blob centers are uniform in `center_box`; the first blob gets the extra
    point when n is odd. Rows are shuffled.
    """
    if n < 10:
        raise ValueError("need at least 10 samples")
    if nuisance not in NUISANCE_KINDS:
        raise ValueError(f"unknown nuisance kind {nuisance!r}; expected one of {NUISANCE_KINDS}")
    cov = block_covariance(num_nuisance, num_blocks, within, across) if num_nuisance else None
    rng = np.random.default_rng(rng_seed)

    centers = rng.uniform(center_box[0], center_box[1], size=(2, N_INFORMATIVE))
    labels = np.repeat([0, 1], [n - n // 2, n // 2])
    informative = centers[labels] + cluster_std * rng.standard_normal((n, N_INFORMATIVE))
    perm = rng.permutation(n)
    labels, informative = labels[perm], informative[perm]

    columns = [informative]
    if num_nuisance:
        chol = np.linalg.cholesky(cov)
        z = rng.standard_normal((n, num_nuisance)) @ chol.T
        columns.append(z if nuisance == GAUSSIAN_BLOCKS else laplace_from_normal(z))
    values = np.hstack(columns)
    params = {
        "generator": "blobs",
        "n": n,
        "nuisance": nuisance,
        "num_nuisance": num_nuisance,
        "num_blocks": num_blocks,
        "within": within,
        "across": across,
        "cluster_std": cluster_std,
        "center_box": list(center_box),
        "seed": rng_seed,
        "centers": centers.tolist(),
    }
    return SyntheticDataset(
        data=DataMatrix(values, default_names(values.shape[1])),
        true_labels=labels,
        informative_features=tuple(range(N_INFORMATIVE)),
        generator_params=params,
    )


def gen_interval_samples(n: int, rng_seed=0) -> DataMatrix:
    if n < 10:
        raise ValueError("need at least 10 samples")
    rng = np.random.default_rng(rng_seed)
    return DataMatrix(rng.uniform(0.0, 1.0, size=(n, 1)), ("x",))


def _abs_correlation(a, b) -> float:
    a = np.asarray(a, dtype=float) - np.mean(a)
    b = np.asarray(b, dtype=float) - np.mean(b)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ValueError("correlation undefined for a constant input")
    return float(abs(a @ b) / (na * nb))


def interval_eigenfunction_alignment(v, x, k: int) -> float:
    """|Pearson correlation| between a vector and cos(k pi x)."""
    x = np.asarray(x, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    if v.shape != x.shape:
        raise ValueError("vector and sample positions differ in length")
    return _abs_correlation(v, np.cos(k * np.pi * x))


def _center_unit(f):
    f = f - f.mean(axis=0)
    norms = np.linalg.norm(f, axis=0)
    if np.any(norms == 0):
        raise ValueError("cannot normalize a constant feature")
    return f / norms


def gen_product_manifold(n: int, h: int = 2, features_per_latent: int = 3, poly_degrees=(3,),
                         rng_seed=0) -> ManifoldSample:
    """Features that are random polynomials of independent uniform latents.

    Feature j of latent t uses degree poly_degrees[j % len(poly_degrees)] with
    coefficients uniform in [-1, 1]; columns are centered and unit-norm.
    """
    if h < 2:
        raise ValueError("need at least two latent variables")
    degrees = [int(d) for d in poly_degrees]
    if not degrees or min(degrees) < 1:
        raise ValueError("polynomial degrees must be >= 1")
    rng = np.random.default_rng(rng_seed)
    latents = rng.uniform(0.0, 1.0, size=(n, h))
    columns, owner = [], []
    for t in range(h):
        for j in range(features_per_latent):
            deg = degrees[j % len(degrees)]
            for _ in range(MAX_POLY_REDRAWS):
                coef = rng.uniform(-1.0, 1.0, size=deg + 1)
                f = np.polynomial.polynomial.polyval(latents[:, t], coef)
                if f.std() > 1e-8 * max(1.0, np.abs(f).max()):
                    break
            else:
                raise ValueError("polynomial feature stayed numerically constant")
            columns.append(f)
            owner.append(t)
    values = _center_unit(np.column_stack(columns))
    params = {
        "generator": "manifold",
        "n": n,
        "latents": h,
        "features_per_latent": features_per_latent,
        "poly_degrees": degrees,
        "seed": rng_seed,
    }
    return ManifoldSample(
        data=DataMatrix(values, default_names(values.shape[1])),
        latents=latents,
        feature_owner=np.asarray(owner, dtype=int),
        generator_params=params,
    )


def eigenfunction_inner_products(features, basis) -> np.ndarray:
    """|f_m . v_b| for every centered, unit-norm feature and every basis vector."""
    if isinstance(features, ManifoldSample):
        features = features.data
    f = features.values if isinstance(features, DataMatrix) else np.asarray(features, dtype=float)
    vecs = basis.eigenvectors if isinstance(basis, SpectralBasis) else np.asarray(basis, dtype=float)
    if f.shape[0] != vecs.shape[0]:
        raise ValueError("features and eigenvectors disagree on the number of samples")
    return np.abs(_center_unit(f).T @ vecs)


def recall_at_k(ranking: FeatureRanking, truth, k: int) -> float:
    """Share of the top-k features that are truly informative.

    Divides by min(k, |truth|), so it is the top-k true positive rate for
    k <= |truth| and recall of the informative set otherwise.
    """
    truth = set(int(t) for t in truth)
    if not truth:
        raise ValueError("empty ground-truth feature set")
    if k < 1:
        raise ValueError("k must be at least 1")
    top = set(int(j) for j in ranking.order[:k])
    return len(top & truth) / min(k, len(truth))
