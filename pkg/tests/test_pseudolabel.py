import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ssfs.graph import SYMMETRIC, AffinityGraph, SpectralBasis, laplacian, smallest_eigenpairs
from ssfs.pseudolabel import (
    ConstantEigenvectorError,
    binarize_basis,
    is_trivial,
    kmedoids_1d,
    subset,
)


def brute_force_cost(v):
    """Minimum 2-medoid cost over every medoid pair and every assignment."""
    v = list(v)
    n = len(v)
    values = sorted(set(v))
    best = np.inf
    for a, b in itertools.combinations(values, 2):
        # every assignment of points to the two medoids, not only the nearest one
        for mask in range(1 << n):
            cost = sum(abs(v[i] - (b if mask >> i & 1 else a)) for i in range(n))
            best = min(best, cost)
    return best


def nearest_cost(v, m0, m1):
    d0, d1 = np.abs(v - m0), np.abs(v - m1)
    return float(np.minimum(d0, d1).sum())


def test_two_pure_groups():
    labels, medoids, cost = kmedoids_1d([0, 0, 0, 1, 1, 1])
    np.testing.assert_array_equal(labels, [0, 0, 0, 1, 1, 1])
    assert medoids == (0.0, 1.0) and cost == 0.0


def test_outlier_isolated():
    labels, medoids, _ = kmedoids_1d([0, 0.1, 0.2, 10])
    np.testing.assert_array_equal(labels, [0, 0, 0, 1])
    assert medoids == (0.1, 10.0)


def test_constant_vector_rejected():
    with pytest.raises(ConstantEigenvectorError, match="constant eigenvector"):
        kmedoids_1d([2.0, 2.0, 2.0])


@pytest.mark.parametrize("seed", range(6))
def test_matches_exhaustive_assignment_enumeration(seed):
    v = np.random.default_rng(seed).integers(-8, 8, size=7) / 4.0
    if len(set(v)) < 2:
        v[0] += 1
    _, _, cost = kmedoids_1d(v)
    assert cost == brute_force_cost(v)


dyadic = st.lists(st.integers(-64, 64).map(lambda k: k / 8.0), min_size=2, max_size=12).filter(
    lambda xs: len(set(xs)) > 1)


@settings(max_examples=200, deadline=None)
@given(dyadic)
def test_optimal_over_medoid_pairs(v):
    v = np.array(v)
    labels, (m0, m1), cost = kmedoids_1d(v)
    pairs = itertools.combinations(sorted(set(v)), 2)
    assert cost == min(nearest_cost(v, a, b) for a, b in pairs)
    # reported cost is the attained objective of the returned assignment
    assert cost == float(np.where(labels == 1, np.abs(v - m1), np.abs(v - m0)).sum())


@settings(max_examples=100, deadline=None)
@given(dyadic)
def test_assignment_contiguous_and_canonical(v):
    v = np.array(v)
    labels, (m0, m1), _ = kmedoids_1d(v)
    assert m0 < m1
    assert set(labels) == {0, 1}
    d0, d1 = np.abs(v - m0), np.abs(v - m1)
    np.testing.assert_array_equal(labels, (d1 < d0).astype(int))
    sorted_labels = labels[np.argsort(v, kind="stable")]
    assert np.all(np.diff(sorted_labels) >= 0)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-100, 100, allow_nan=False), min_size=2, max_size=30, unique=True))
def test_sign_flip_gives_same_partition(v):
    v = np.array(v)
    a, _, cost_a = kmedoids_1d(v)
    b, _, cost_b = kmedoids_1d(-v)
    assert cost_a == pytest.approx(cost_b, rel=1e-9, abs=1e-9)
    if not np.array_equal(a, 1 - b):
        # only a genuine tie between two partitions may differ
        alt = nearest_cost(v, *sorted(-np.array(kmedoids_1d(-v)[1])))
        assert alt == pytest.approx(cost_a, rel=1e-9, abs=1e-9)


@pytest.mark.parametrize("m", [5, 8, 20])
@pytest.mark.parametrize("big", [10.0, 50.0, 1e6])
def test_outlier_never_pulls_bulk_medoid(m, big):
    _, (m0, _), _ = kmedoids_1d([0.0] * m + [1.0, big])
    assert m0 == 0.0


def _basis(vectors, values=None, sqrt_degrees=None):
    vectors = np.asarray(vectors, dtype=float)
    values = np.arange(vectors.shape[1], dtype=float) if values is None else np.asarray(values)
    return SpectralBasis(values, vectors, SYMMETRIC, sqrt_degrees=sqrt_degrees)


def test_skip_trivial_leading_vector():
    n = 6
    const = np.full(n, 1 / np.sqrt(n))
    other = np.array([-2, -1, -1, 1, 1, 2]) / np.sqrt(12)
    pl = binarize_basis(_basis(np.c_[const, other]))
    assert pl.dropped_trivial and pl.source_indices == (1,)
    np.testing.assert_array_equal(pl.labels[0], [0, 0, 0, 1, 1, 1])
    keep = binarize_basis(_basis(np.c_[other, other]), skip_trivial=True)
    assert keep.source_indices == (0, 1)


def test_trivial_detection_uses_degrees():
    deg = np.array([1.0, 4.0, 9.0])
    v = np.sqrt(deg) / np.linalg.norm(np.sqrt(deg))
    assert is_trivial(v, np.sqrt(deg))
    assert not is_trivial(v)


def test_constant_later_vector_is_excluded():
    other = np.array([0.0, 0.0, 1.0, 1.0])
    pl = binarize_basis(_basis(np.c_[other, np.full(4, 0.5), -other]), skip_trivial=False)
    assert pl.excluded == (1,)
    assert pl.source_indices == (0, 2)


def test_no_usable_vectors():
    with pytest.raises(ValueError):
        binarize_basis(_basis(np.c_[np.full(4, 0.5), np.full(4, 0.5)]), skip_trivial=False)


def test_three_blob_bipartitions():
    sizes = [5, 7, 9]
    n = sum(sizes)
    member = np.repeat([0, 1, 2], sizes)
    w = (member[:, None] == member[None, :]).astype(float)
    # weak bridges keep the graph connected so the basis is well defined
    w[w == 0] = 1e-4
    g = AffinityGraph(w, w.sum(axis=1), "fixed")
    basis = smallest_eigenpairs(laplacian(g, SYMMETRIC), 3, SYMMETRIC, np.sqrt(g.degrees))
    pl = binarize_basis(basis)
    assert pl.dropped_trivial and len(pl) == 2
    for y in pl.labels:
        # each label vector is constant on every blob
        for c in range(3):
            assert len(set(y[member == c])) == 1


def test_sign_flip_of_basis_column():
    v = np.array([[0.1, -0.3], [0.4, 0.2], [-0.6, 0.5], [0.2, -0.1]])
    a = binarize_basis(_basis(v), skip_trivial=False)
    flipped = v.copy()
    flipped[:, 1] *= -1
    b = binarize_basis(_basis(flipped), skip_trivial=False)
    np.testing.assert_array_equal(a.labels[0], b.labels[0])
    np.testing.assert_array_equal(a.labels[1], 1 - b.labels[1])


def test_subset_keeps_rows_in_order():
    v = np.array([[0.1, -0.3, 1.0], [0.4, 0.2, 2.0], [-0.6, 0.5, 0.0]])
    pl = binarize_basis(_basis(v, values=[0.1, 0.2, 0.3]), skip_trivial=False)
    sub = subset(pl, [2, 0])
    assert sub.source_indices == (2, 0)
    np.testing.assert_array_equal(sub.source_eigenvalues, [0.3, 0.1])
    np.testing.assert_array_equal(sub.labels, pl.labels[[2, 0]])
