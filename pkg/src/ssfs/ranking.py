"""Feature rankings and the max-over-eigenvectors aggregation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def descending_order(scores):
    """Indices sorted by descending score; ties keep ascending feature index."""
    scores = np.asarray(scores, dtype=float)
    # stable sort on the negated scores keeps lower indices first among ties
    return np.argsort(-scores, kind="stable")


@dataclass(frozen=True)
class FeatureRanking:
    scores: np.ndarray
    order: np.ndarray
    per_eigenvector_scores: np.ndarray | None = None
    selected_eigenvectors: tuple[int, ...] = ()
    feature_names: tuple[str, ...] | None = None

    @classmethod
    def from_scores(cls, scores, per_eigenvector_scores=None, selected_eigenvectors=(),
                    feature_names=None):
        scores = np.asarray(scores, dtype=float)
        if feature_names is not None:
            feature_names = tuple(feature_names)
        return cls(
            scores=scores,
            order=descending_order(scores),
            per_eigenvector_scores=per_eigenvector_scores,
            selected_eigenvectors=tuple(int(i) for i in selected_eigenvectors),
            feature_names=feature_names,
        )

    @property
    def num_features(self) -> int:
        return len(self.scores)

    def name_of(self, index: int) -> str:
        if self.feature_names is None:
            return f"f{index}"
        return self.feature_names[index]


def aggregate_max(per_vector_scores):
    """Column-wise maximum of an (eigenvectors x features) score matrix."""
    s = np.atleast_2d(np.asarray(per_vector_scores, dtype=float))
    if s.size == 0:
        raise ValueError("cannot aggregate an empty score matrix")
    row_sums = s.sum(axis=1)
    if not np.allclose(row_sums, 1.0, atol=1e-6):
        raise ValueError(f"score rows must sum to 1, got sums {row_sums}")
    return s.max(axis=0)


def top_features(ranking: FeatureRanking, count: int) -> list[int]:
    p = ranking.num_features
    if not 1 <= count <= p:
        raise ValueError(f"requested {count} features, ranking has {p}")
    return [int(i) for i in ranking.order[:count]]


def random_ranking(num_features: int, seed=None, feature_names=None) -> FeatureRanking:
    """Random-selection baseline: a uniformly random permutation."""
    rng = np.random.default_rng(seed)
    perm = rng.permutation(num_features)
    # scores decrease along the permutation so `order` reproduces it
    scores = np.empty(num_features)
    scores[perm] = np.arange(num_features, 0, -1) / num_features
    return FeatureRanking.from_scores(scores, feature_names=feature_names)
