"""Second-order gradient boosting over depth-limited regression trees.

Exact greedy split search on presorted feature values, grown level by level.
Split candidates sit between consecutive distinct values of a feature; a
sample goes left when its value is below the threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logit

LOGISTIC_LOSS = "binary:logistic"
SQUARED_LOSS = "reg:squarederror"
IMPORTANCE_TYPES = ("total_gain", "gain", "weight")

# a split must reduce the regularized loss by more than this
MIN_SPLIT_GAIN = 1e-12


@dataclass(frozen=True)
class Tree:
    feature: np.ndarray  # -1 marks a leaf
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray  # leaf output, learning rate already applied

    def predict(self, v):
        node = np.zeros(v.shape[0], dtype=int)
        rows = np.arange(v.shape[0])
        while True:
            feat = self.feature[node]
            inner = feat >= 0
            if not inner.any():
                return self.value[node]
            r = rows[inner]
            go_left = v[r, feat[inner]] < self.threshold[node[inner]]
            node[r] = np.where(go_left, self.left[node[inner]], self.right[node[inner]])


@dataclass(frozen=True)
class Booster:
    objective: str
    base_margin: float
    trees: tuple[Tree, ...]
    gain: np.ndarray
    split_count: np.ndarray
    loss_history: tuple[float, ...]  # training loss before any tree, then after each

    def margin(self, v):
        out = np.full(v.shape[0], self.base_margin)
        for tree in self.trees:
            out += tree.predict(v)
        return out

    def predict(self, v):
        m = self.margin(np.asarray(v, dtype=float))
        return expit(m) if self.objective == LOGISTIC_LOSS else m

    def importances(self, importance_type: str = "total_gain") -> np.ndarray:
        if importance_type == "total_gain":
            return self.gain.copy()
        if importance_type == "weight":
            return self.split_count.astype(float)
        if importance_type == "gain":
            out = np.zeros_like(self.gain)
            used = self.split_count > 0
            out[used] = self.gain[used] / self.split_count[used]
            return out
        raise ValueError(f"unknown importance type {importance_type!r}")


def training_loss(objective, y, margin) -> float:
    if objective == LOGISTIC_LOSS:
        return float(np.mean(np.maximum(margin, 0) + np.log1p(np.exp(-np.abs(margin))) - y * margin))
    return float(np.mean(0.5 * (margin - y) ** 2))


def _grad_hess(objective, y, margin):
    if objective == LOGISTIC_LOSS:
        p = expit(margin)
        return p - y, p * (1.0 - p)
    return margin - y, np.ones_like(margin)


def _best_split(vals, cg, ch, start, stop, g_tot, h_tot, min_child_weight, reg_lambda):
    """Best (gain, feature, row) for the node occupying sorted rows [start, stop).

    Ties go to the lowest feature index, then the lowest threshold.
    """
    base_g = cg[start - 1] if start > 0 else 0.0
    base_h = ch[start - 1] if start > 0 else 0.0
    gl = cg[start:stop - 1] - base_g
    hl = ch[start:stop - 1] - base_h
    gr = g_tot - gl
    hr = h_tot - hl
    gain = 0.5 * (gl * gl / (hl + reg_lambda) + gr * gr / (hr + reg_lambda)
                  - g_tot * g_tot / (h_tot + reg_lambda))
    valid = (vals[start:stop - 1] < vals[start + 1:stop]) & (hl >= min_child_weight) & (hr >= min_child_weight)
    gain = np.where(valid, gain, -np.inf)
    # feature-major flattening: argmax takes the first maximum in (feature, row) order
    flat = gain.T.ravel()
    pos = int(np.argmax(flat))
    best = flat[pos]
    n_rows = stop - start - 1
    return best, pos // n_rows, start + pos % n_rows


def _grow_tree(v, order, g, h, max_depth, min_child_weight, reg_lambda, learning_rate,
               gain_acc, count_acc):
    n, p = v.shape
    cols = np.arange(p)
    node_of = np.zeros(n, dtype=int)  # -1 once a sample sits in a finished leaf
    feature, threshold, left, right, value = [-1], [0.0], [-1], [-1], [0.0]
    leaf_value = np.zeros(n)
    frontier = [0]

    def finish(node, members, g_sum, h_sum):
        w = -g_sum / (h_sum + reg_lambda) * learning_rate
        value[node] = w
        leaf_value[members] = w
        node_of[members] = -1

    for depth in range(max_depth + 1):
        if not frontier:
            break
        # regroup every presorted column by node id; value order survives within a node
        key = node_of[order]
        perm = np.argsort(key, axis=0, kind="stable")
        rows = np.take_along_axis(order, perm, axis=0)
        node_sorted = np.sort(node_of)
        vals = v[rows, cols]
        cg = np.cumsum(g[rows], axis=0)
        ch = np.cumsum(h[rows], axis=0)

        next_frontier = []
        for node in frontier:
            start = int(np.searchsorted(node_sorted, node, side="left"))
            stop = int(np.searchsorted(node_sorted, node, side="right"))
            members = rows[start:stop, 0]
            g_sum = float(g[members].sum())
            h_sum = float(h[members].sum())
            if depth == max_depth or stop - start < 2:
                finish(node, members, g_sum, h_sum)
                continue
            best, j, r = _best_split(vals, cg, ch, start, stop, g_sum, h_sum,
                                     min_child_weight, reg_lambda)
            if not best > MIN_SPLIT_GAIN:
                finish(node, members, g_sum, h_sum)
                continue
            lo, hi = vals[r, j], vals[r + 1, j]
            thr = 0.5 * (lo + hi)
            if not lo < thr:
                thr = hi
            gain_acc[j] += best
            count_acc[j] += 1
            li, ri = len(feature), len(feature) + 1
            feature[node], threshold[node], left[node], right[node] = j, thr, li, ri
            for _ in range(2):
                feature.append(-1)
                threshold.append(0.0)
                left.append(-1)
                right.append(-1)
                value.append(0.0)
            go_left = v[members, j] < thr
            node_of[members[go_left]] = li
            node_of[members[~go_left]] = ri
            next_frontier.extend([li, ri])
        frontier = next_frontier

    tree = Tree(
        feature=np.asarray(feature, dtype=int),
        threshold=np.asarray(threshold),
        left=np.asarray(left, dtype=int),
        right=np.asarray(right, dtype=int),
        value=np.asarray(value),
    )
    return tree, leaf_value


def fit_booster(v, y, objective=LOGISTIC_LOSS, n_estimators=100, max_depth=6, learning_rate=0.3,
                min_child_weight=1.0, reg_lambda=1.0, base_score=0.5) -> Booster:
    v = np.asarray(v, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = v.shape
    base_margin = float(logit(base_score)) if objective == LOGISTIC_LOSS else float(base_score)
    margin = np.full(n, base_margin)
    order = np.argsort(v, axis=0, kind="stable")
    gain = np.zeros(p)
    count = np.zeros(p, dtype=int)
    trees = []
    history = [training_loss(objective, y, margin)]
    for _ in range(n_estimators):
        g, h = _grad_hess(objective, y, margin)
        tree, update = _grow_tree(v, order, g, h, max_depth, min_child_weight, reg_lambda,
                                  learning_rate, gain, count)
        trees.append(tree)
        margin = margin + update
        history.append(training_loss(objective, y, margin))
    return Booster(objective, base_margin, tuple(trees), gain, count, tuple(history))
