"""End-to-end spectral self-supervised feature ranking and its ablation variants."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import graph, surrogate
from .dataio import DataMatrix, zscore_normalize
from .eigenselect import StabilityReport, _map, select_eigenvectors
from .pseudolabel import PseudoLabelSet, binarize_basis, subset
from .ranking import FeatureRanking, aggregate_max, top_features  # noqa: F401  (re-export)
from .surrogate import SurrogateSpec, make_spec

FULL = "full"
NO_SELECTION = "no-selection"
NO_GBT = "no-gbt"
REGRESSION = "regression"
NO_SELECTION_REGRESSION = "no-selection-regression"
VARIANTS = (FULL, NO_SELECTION, NO_GBT, REGRESSION, NO_SELECTION_REGRESSION)


@dataclass(frozen=True)
class SsfsConfig:
    num_select_k: int
    num_compute_d: int | None = None  # defaults to 2k
    selector_spec: SurrogateSpec = field(default_factory=lambda: make_spec(surrogate.LOGISTIC))
    scorer_spec: SurrogateSpec = field(default_factory=lambda: make_spec(surrogate.GBT_CLASSIFIER))
    resamples: int = 500
    subsample_fraction: float = 0.95
    laplacian_variant: str = graph.SYMMETRIC
    neighbor_k: int = 2
    bandwidth: float | None = None  # fixed kernel scale; None means adaptive
    seed: int = 0
    variant: str = FULL
    threads: int | None = None

    def __post_init__(self):
        if self.num_compute_d is None:
            object.__setattr__(self, "num_compute_d", 2 * self.num_select_k)
        if not 1 <= self.num_select_k <= self.num_compute_d:
            raise ValueError(f"need 1 <= k <= d, got k={self.num_select_k}, d={self.num_compute_d}")
        if self.resamples < 2:
            raise ValueError("need at least two resamples")
        if not 0 < self.subsample_fraction <= 1:
            raise ValueError("subsample fraction must be in (0, 1]")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.laplacian_variant not in graph.LAPLACIAN_VARIANTS:
            raise ValueError(f"unknown Laplacian variant {self.laplacian_variant!r}")

    @property
    def uses_selection(self) -> bool:
        return self.variant in (FULL, NO_GBT, REGRESSION)

    @property
    def regression(self) -> bool:
        return self.variant in (REGRESSION, NO_SELECTION_REGRESSION)

    def resolved_specs(self) -> tuple[SurrogateSpec, SurrogateSpec]:
        """(selector, scorer) after applying the variant's model substitutions."""
        gbt_params = {}
        if self.scorer_spec.kind in (surrogate.GBT_CLASSIFIER, surrogate.GBT_REGRESSOR):
            gbt_params = dict(self.scorer_spec.hyperparameters)
        if self.variant == NO_GBT:
            return self.selector_spec, self._logistic_like(self.selector_spec)
        if self.regression:
            selector = self.selector_spec
            if selector.kind != surrogate.RIDGE:
                selector = make_spec(surrogate.RIDGE)
            return selector, make_spec(surrogate.GBT_REGRESSOR, **gbt_params)
        return self.selector_spec, self.scorer_spec

    @staticmethod
    def _logistic_like(spec):
        if spec.kind == surrogate.LOGISTIC:
            return spec
        return make_spec(surrogate.LOGISTIC)


@dataclass(frozen=True)
class SsfsResult:
    ranking: FeatureRanking
    basis: graph.SpectralBasis
    pseudo_labels: PseudoLabelSet
    stability: StabilityReport | None
    timings: dict


def _pseudo_labels(x: DataMatrix, cfg: SsfsConfig):
    d = cfg.num_compute_d
    n = x.n_samples
    # one extra vector for the trivial one, dropped before indexing
    basis = graph.spectral_basis(
        x, min(d + 1, n), variant=cfg.laplacian_variant,
        bandwidth=cfg.bandwidth, neighbor_k=cfg.neighbor_k,
    )
    pl = binarize_basis(basis, skip_trivial=True)
    if len(pl) > d:
        pl = subset(pl, range(d))
    if len(pl) < cfg.num_select_k:
        raise ValueError(f"only {len(pl)} usable eigenvectors for k={cfg.num_select_k}")
    return basis, pl


def run_ssfs(x: DataMatrix, cfg: SsfsConfig) -> SsfsResult:
    """Graph, eigenvectors, pseudo-labels, selection, scoring, aggregation."""
    if not x.normalized:
        x = zscore_normalize(x)
    timings = {}
    t0 = time.perf_counter()
    basis, pl = _pseudo_labels(x, cfg)
    timings["spectral"] = time.perf_counter() - t0

    selector, scorer = cfg.resolved_specs()
    k = cfg.num_select_k
    report = None
    t0 = time.perf_counter()
    if cfg.uses_selection:
        report = select_eigenvectors(
            x, pl, k, selector, b=cfg.resamples, fraction=cfg.subsample_fraction,
            rng_seed=cfg.seed, threads=cfg.threads, continuous=cfg.regression,
        )
        chosen = report.selected
    else:
        chosen = tuple(range(k))
    timings["selection"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    targets = pl.eigenvectors.T if cfg.regression else pl.labels.astype(float)
    rows = _map(lambda i: surrogate.feature_scores(surrogate.fit(x, targets[i], scorer)),
                chosen, cfg.threads)
    per_vector = np.vstack(rows)
    scores = aggregate_max(per_vector)
    timings["scoring"] = time.perf_counter() - t0

    ranking = FeatureRanking.from_scores(
        scores,
        per_eigenvector_scores=per_vector,
        selected_eigenvectors=chosen,
        feature_names=x.feature_names,
    )
    return SsfsResult(ranking, basis, pl, report, timings)


def ssfs_rank(x: DataMatrix, cfg: SsfsConfig) -> FeatureRanking:
    return run_ssfs(x, cfg).ranking


def laplacian_score_ranking(x: DataMatrix, variant: str = graph.UNNORMALIZED,
                            neighbor_k: int = 2, bandwidth=None) -> FeatureRanking:
    """Laplacian-score baseline as a ranking: smoother features rank higher."""
    if not x.normalized:
        x = zscore_normalize(x)
    g = graph.build_graph(x, bandwidth=bandwidth, neighbor_k=neighbor_k)
    s = graph.laplacian_score(x, graph.laplacian(g, variant))
    return FeatureRanking.from_scores(-s, feature_names=x.feature_names)
