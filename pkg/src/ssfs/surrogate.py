"""Supervised surrogate models that expose per-feature importances.

Each fit returns a `TrainedModel` whose `raw_importances` are nonnegative;
`feature_scores` turns them into a distribution over features.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType

import numpy as np
import scipy.linalg
import scipy.optimize
from scipy.special import expit

from . import gbt
from .dataio import DataMatrix

LOGISTIC = "logistic"
RIDGE = "ridge"
GBT_CLASSIFIER = "gbt-classifier"
GBT_REGRESSOR = "gbt-regressor"
KINDS = (LOGISTIC, RIDGE, GBT_CLASSIFIER, GBT_REGRESSOR)

_GBT_DEFAULTS = {
    "n_estimators": 100,
    "max_depth": 6,
    "learning_rate": 0.3,
    "min_child_weight": 1.0,
    "reg_lambda": 1.0,
    "base_score": 0.5,
    "importance_type": "total_gain",
    "seed": 0,
}

DEFAULTS = {
    LOGISTIC: {"C": 1.0, "tol": 1e-6, "max_iter": 1000},
    RIDGE: {"alpha": 1.0},
    GBT_CLASSIFIER: _GBT_DEFAULTS,
    GBT_REGRESSOR: _GBT_DEFAULTS,
}

CLASSIFIERS = (LOGISTIC, GBT_CLASSIFIER)

# the Newton system is (p+1)x(p+1); beyond this size quasi-Newton is cheaper
NEWTON_MAX_FEATURES = 1000


class SingleClassError(ValueError):
    pass


@dataclass(frozen=True)
class SurrogateSpec:
    kind: str
    hyperparameters: MappingProxyType = field(default_factory=lambda: MappingProxyType({}))

    def __post_init__(self):
        if self.kind not in DEFAULTS:
            raise ValueError(f"unknown surrogate kind {self.kind!r}; expected one of {sorted(DEFAULTS)}")
        defaults = DEFAULTS[self.kind]
        given = dict(self.hyperparameters)
        unknown = set(given) - set(defaults)
        if unknown:
            raise ValueError(f"unknown hyperparameters for {self.kind}: {sorted(unknown)}")
        merged = {**defaults, **given}
        _validate(self.kind, merged)
        object.__setattr__(self, "hyperparameters", MappingProxyType(merged))

    @property
    def is_classifier(self) -> bool:
        return self.kind in CLASSIFIERS

    def __getitem__(self, key):
        return self.hyperparameters[key]


def _validate(kind, hp):
    if kind == LOGISTIC:
        positive = ("C", "tol", "max_iter")
    elif kind == RIDGE:
        positive = ("alpha",)
    else:
        positive = ("max_depth", "learning_rate", "reg_lambda")
        if hp["n_estimators"] < 0:
            raise ValueError("n_estimators must be >= 0")
        if hp["min_child_weight"] < 0:
            raise ValueError("min_child_weight must be >= 0")
        if hp["importance_type"] not in gbt.IMPORTANCE_TYPES:
            raise ValueError(f"importance_type must be one of {gbt.IMPORTANCE_TYPES}")
        if kind == GBT_CLASSIFIER and not 0 < hp["base_score"] < 1:
            raise ValueError("base_score must be in (0, 1) for a classifier")
    for key in positive:
        if not hp[key] > 0:
            raise ValueError(f"{key} must be positive, got {hp[key]}")


def make_spec(kind: str, **hyperparameters) -> SurrogateSpec:
    return SurrogateSpec(kind, MappingProxyType(hyperparameters))


@dataclass(frozen=True)
class TrainedModel:
    spec: SurrogateSpec
    parameters: dict
    raw_importances: np.ndarray

    def predict(self, x):
        v = _values(x)
        if self.spec.kind == LOGISTIC:
            return expit(v @ self.parameters["coef"] + self.parameters["intercept"])
        if self.spec.kind == RIDGE:
            return v @ self.parameters["coef"] + self.parameters["intercept"]
        return self.parameters["booster"].predict(v)


def _values(x):
    v = x.values if isinstance(x, DataMatrix) else np.asarray(x, dtype=float)
    if v.ndim == 1:
        v = v[:, None]
    return v


def _check_inputs(v, y):
    if v.shape[0] != y.shape[0]:
        raise ValueError(f"{v.shape[0]} rows but {y.shape[0]} targets")
    if not (np.all(np.isfinite(v)) and np.all(np.isfinite(y))):
        raise ValueError("non-finite input")


def _check_binary(y):
    values = np.unique(y)
    if not np.all(np.isin(values, (0, 1))):
        raise ValueError("classification targets must be 0/1")
    if values.size < 2:
        raise SingleClassError("targets contain a single class")


def logistic_objective(coef, intercept, v, y, C):
    """Mean negative log-likelihood plus ||coef||^2 / (2 C n).

    Returns (loss, grad_coef, grad_intercept).
    """
    n = v.shape[0]
    z = v @ coef + intercept
    # log(1 + e^z) - y z, evaluated without overflow
    loss = np.mean(np.maximum(z, 0) + np.log1p(np.exp(-np.abs(z))) - y * z)
    loss += coef @ coef / (2.0 * C * n)
    r = (expit(z) - y) / n
    return loss, v.T @ r + coef / (C * n), r.sum()


def _newton_logistic(v, y, C, tol, max_iter):
    n, p = v.shape
    coef = np.zeros(p)
    intercept = 0.0
    z_aug = np.hstack([v, np.ones((n, 1))])
    ridge = np.full(p + 1, 1.0 / (C * n))
    ridge[-1] = 0.0
    loss, gc, gi = logistic_objective(coef, intercept, v, y, C)
    iterations = 0
    for iterations in range(1, int(max_iter) + 1):
        grad = np.append(gc, gi)
        if np.linalg.norm(grad) <= tol:
            break
        pr = expit(v @ coef + intercept)
        s = pr * (1 - pr) / n
        hess = (z_aug * s[:, None]).T @ z_aug + np.diag(ridge)
        # tiny jitter keeps the intercept direction solvable on saturated fits
        hess[np.diag_indices_from(hess)] += 1e-12
        step = scipy.linalg.solve(hess, grad, assume_a="pos")
        slope = grad @ step
        t = 1.0
        while True:
            new_coef = coef - t * step[:-1]
            new_int = intercept - t * step[-1]
            new_loss, ngc, ngi = logistic_objective(new_coef, new_int, v, y, C)
            if new_loss <= loss - 1e-4 * t * slope or t < 1e-10:
                break
            t *= 0.5
        coef, intercept, loss, gc, gi = new_coef, new_int, new_loss, ngc, ngi
    return coef, intercept, loss, iterations


def _lbfgs_logistic(v, y, C, tol, max_iter):
    p = v.shape[1]

    def fun(w):
        loss, gc, gi = logistic_objective(w[:p], w[p], v, y, C)
        return loss, np.append(gc, gi)

    res = scipy.optimize.minimize(
        fun, np.zeros(p + 1), jac=True, method="L-BFGS-B",
        options={"gtol": tol, "maxiter": int(max_iter), "ftol": 0.0},
    )
    return res.x[:p], float(res.x[p]), float(res.fun), int(res.nit)


def fit_logistic(x, y, l2_strength: float = 1.0, tol: float = 1e-6, max_iter: int = 1000,
                 spec: SurrogateSpec | None = None) -> TrainedModel:
    """L2-regularized logistic regression; importances are |coef|.

    `l2_strength` is the inverse regularization C (larger means weaker
    penalty). The intercept is not penalized.
    """
    v = _values(x)
    y = np.asarray(y, dtype=float).ravel()
    _check_inputs(v, y)
    _check_binary(y)
    if spec is None:
        spec = make_spec(LOGISTIC, C=l2_strength, tol=tol, max_iter=max_iter)
    C, tol, max_iter = spec["C"], spec["tol"], spec["max_iter"]
    solver = _newton_logistic if v.shape[1] <= NEWTON_MAX_FEATURES else _lbfgs_logistic
    coef, intercept, loss, iterations = solver(v, y, C, tol, max_iter)
    params = {"coef": coef, "intercept": intercept, "loss": loss, "iterations": iterations}
    return TrainedModel(spec, params, np.abs(coef))


def fit_ridge(x, y, l2_strength: float = 1.0, spec: SurrogateSpec | None = None) -> TrainedModel:
    """Ridge regression solved exactly on centered data; importances are |coef|."""
    v = _values(x)
    y = np.asarray(y, dtype=float).ravel()
    _check_inputs(v, y)
    if spec is None:
        spec = make_spec(RIDGE, alpha=l2_strength)
    alpha = spec["alpha"]
    x_mean = v.mean(axis=0)
    y_mean = y.mean()
    xc = v - x_mean
    yc = y - y_mean
    n, p = xc.shape
    if p <= n:
        coef = np.linalg.solve(xc.T @ xc + alpha * np.eye(p), xc.T @ yc)
    else:
        coef = xc.T @ np.linalg.solve(xc @ xc.T + alpha * np.eye(n), yc)
    intercept = y_mean - x_mean @ coef
    return TrainedModel(spec, {"coef": coef, "intercept": float(intercept)}, np.abs(coef))


def fit_gbt(x, y, spec: SurrogateSpec) -> TrainedModel:
    """Second-order gradient boosting; importances are per-feature split gain."""
    v = _values(x)
    y = np.asarray(y, dtype=float).ravel()
    _check_inputs(v, y)
    if spec.kind == GBT_CLASSIFIER:
        _check_binary(y)
        objective = gbt.LOGISTIC_LOSS
    elif spec.kind == GBT_REGRESSOR:
        objective = gbt.SQUARED_LOSS
    else:
        raise ValueError(f"{spec.kind} is not a boosted-tree surrogate")
    hp = spec.hyperparameters
    booster = gbt.fit_booster(
        v, y,
        objective=objective,
        n_estimators=int(hp["n_estimators"]),
        max_depth=int(hp["max_depth"]),
        learning_rate=float(hp["learning_rate"]),
        min_child_weight=float(hp["min_child_weight"]),
        reg_lambda=float(hp["reg_lambda"]),
        base_score=float(hp["base_score"]),
    )
    raw = booster.importances(hp["importance_type"])
    return TrainedModel(spec, {"booster": booster, "loss_history": booster.loss_history}, raw)


def fit(x, y, spec: SurrogateSpec) -> TrainedModel:
    if spec.kind == LOGISTIC:
        return fit_logistic(x, y, spec=spec)
    if spec.kind == RIDGE:
        return fit_ridge(x, y, spec=spec)
    return fit_gbt(x, y, spec)


def feature_scores(model) -> np.ndarray:
    """Importances normalized to sum to one; uniform when all are zero."""
    raw = model.raw_importances if isinstance(model, TrainedModel) else model
    raw = np.asarray(raw, dtype=float)
    total = raw.sum()
    if total <= 0:
        return np.full(raw.shape, 1.0 / raw.size)
    return raw / total
