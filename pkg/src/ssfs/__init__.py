"""Spectral self-supervised feature selection."""

from .dataio import DataMatrix, LabeledDataset, load_matrix, zscore_normalize
from .pipeline import SsfsConfig, SsfsResult, laplacian_score_ranking, run_ssfs, ssfs_rank
from .ranking import FeatureRanking, top_features

__version__ = "0.1.0"

__all__ = [
    "DataMatrix",
    "FeatureRanking",
    "LabeledDataset",
    "SsfsConfig",
    "SsfsResult",
    "laplacian_score_ranking",
    "load_matrix",
    "run_ssfs",
    "ssfs_rank",
    "top_features",
    "zscore_normalize",
]
