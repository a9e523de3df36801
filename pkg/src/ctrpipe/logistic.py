"""Weighted logistic-regression CTR model.

The learner consumes effective labels and effective instance weights
and predicts pCTR from the augmented feature vector alone - never from
position or weight. The loss is

    (1 / sum w) * sum_i w_i * logloss(y_i, sigmoid(theta . x_i + b))
    + (l2 / 2) * ||theta||^2

minimized by deterministic full-batch gradient descent with Armijo
backtracking. Normalizing by sum(w) makes training invariant to a
global rescaling of the weights, and a weight-2 instance contributes
exactly like two unit-weight copies. Features are standardized with
train-set weighted mean/std frozen into the model.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ValidationError

_ARMIJO_C = 1e-4
_MAX_BACKTRACKS = 60


@dataclass(frozen=True)
class TrainingInstance:
    features: tuple[float, ...]
    label: int
    weight: float = 1.0

    def __post_init__(self) -> None:
        if self.label not in (0, 1):
            raise ValidationError(f"label must be 0 or 1, got {self.label}")
        if not self.weight > 0:
            raise ValidationError(f"weight must be > 0, got {self.weight}")
        if not all(map(math.isfinite, self.features)):
            raise ValidationError("features must all be finite")


@dataclass(frozen=True)
class TrainConfig:
    l2: float = 1e-4
    max_iters: int = 500
    tolerance: float = 1e-8
    learning_rate: float = 1.0

    def __post_init__(self) -> None:
        if self.l2 < 0:
            raise ValidationError(f"l2 must be >= 0, got {self.l2}")
        if self.max_iters < 1:
            raise ValidationError(f"max_iters must be >= 1, got {self.max_iters}")
        if not self.tolerance > 0:
            raise ValidationError(f"tolerance must be > 0, got {self.tolerance}")
        if not self.learning_rate > 0:
            raise ValidationError(f"learning_rate must be > 0, got {self.learning_rate}")

    def to_json_obj(self) -> dict:
        return {
            "l2": self.l2,
            "max_iters": self.max_iters,
            "tolerance": self.tolerance,
            "learning_rate": self.learning_rate,
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "TrainConfig":
        return cls(
            l2=float(obj.get("l2", 1e-4)),
            max_iters=int(obj.get("max_iters", 500)),
            tolerance=float(obj.get("tolerance", 1e-8)),
            learning_rate=float(obj.get("learning_rate", 1.0)),
        )


@dataclass(frozen=True)
class CtrModel:
    coefficients: np.ndarray
    intercept: float
    feature_means: np.ndarray
    feature_stds: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "coefficients", np.asarray(self.coefficients, dtype=np.float64))
        object.__setattr__(self, "feature_means", np.asarray(self.feature_means, dtype=np.float64))
        object.__setattr__(self, "feature_stds", np.asarray(self.feature_stds, dtype=np.float64))
        if np.any(self.feature_stds <= 0):
            raise ValidationError("feature_stds must all be > 0")

    @property
    def dim(self) -> int:
        return self.coefficients.shape[0]

    def to_json_obj(self) -> dict:
        return {
            "coefficients": [float(c) for c in self.coefficients],
            "intercept": float(self.intercept),
            "feature_means": [float(m) for m in self.feature_means],
            "feature_stds": [float(s) for s in self.feature_stds],
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "CtrModel":
        return cls(
            coefficients=np.asarray(obj["coefficients"], dtype=np.float64),
            intercept=float(obj["intercept"]),
            feature_means=np.asarray(obj["feature_means"], dtype=np.float64),
            feature_stds=np.asarray(obj["feature_stds"], dtype=np.float64),
        )

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_obj(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "CtrModel":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json_obj(json.load(fh))


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def weighted_loss(
    X: np.ndarray, y: np.ndarray, w: np.ndarray, theta: np.ndarray, intercept: float, l2: float
) -> float:
    """Mean weighted logloss plus the l2 ridge term (intercept unpenalized)."""
    z = X @ theta + intercept
    # log(1 + e^z) - y z, computed stably
    ll = np.logaddexp(0.0, z) - y * z
    return float(np.dot(w, ll) / w.sum() + 0.5 * l2 * np.dot(theta, theta))


def weighted_gradient(
    X: np.ndarray, y: np.ndarray, w: np.ndarray, theta: np.ndarray, intercept: float, l2: float
) -> tuple[np.ndarray, float]:
    """Analytic gradient of weighted_loss in (theta, intercept)."""
    z = X @ theta + intercept
    resid = w * (_sigmoid(z) - y)
    wsum = w.sum()
    grad_theta = X.T @ resid / wsum + l2 * theta
    grad_b = float(resid.sum() / wsum)
    return grad_theta, grad_b


def _fit_standardized(
    X: np.ndarray, y: np.ndarray, w: np.ndarray, config: TrainConfig
) -> tuple[np.ndarray, float]:
    n, d = X.shape
    theta = np.zeros(d, dtype=np.float64)
    intercept = 0.0
    loss = weighted_loss(X, y, w, theta, intercept, config.l2)
    step = config.learning_rate
    for _ in range(config.max_iters):
        grad_theta, grad_b = weighted_gradient(X, y, w, theta, intercept, config.l2)
        g_sq = float(np.dot(grad_theta, grad_theta) + grad_b * grad_b)
        if g_sq == 0.0:
            break
        step = min(step * 2.0, 1e6)
        accepted = False
        for _bt in range(_MAX_BACKTRACKS):
            cand_theta = theta - step * grad_theta
            cand_b = intercept - step * grad_b
            cand_loss = weighted_loss(X, y, w, cand_theta, cand_b, config.l2)
            if cand_loss <= loss - _ARMIJO_C * step * g_sq:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        decrease = loss - cand_loss
        relative = decrease / max(abs(loss), 1e-300)
        theta, intercept, loss = cand_theta, cand_b, cand_loss
        if relative < config.tolerance:
            break
    return theta, intercept


def train(instances: Sequence[TrainingInstance], config: TrainConfig | None = None) -> CtrModel:
    """Fit the CTR model; deterministic given (instances, config)."""
    if config is None:
        config = TrainConfig()
    if not instances:
        raise ValidationError("cannot train on an empty instance set")
    dim = len(instances[0].features)
    for inst in instances:
        if len(inst.features) != dim:
            raise ValidationError(
                f"inconsistent feature length: {len(inst.features)} vs {dim}"
            )
    X = np.asarray([inst.features for inst in instances], dtype=np.float64)
    y = np.asarray([inst.label for inst in instances], dtype=np.float64)
    w = np.asarray([inst.weight for inst in instances], dtype=np.float64)
    return train_arrays(X, y, w, config)


def train_arrays(
    X: np.ndarray, y: np.ndarray, w: np.ndarray, config: TrainConfig | None = None
) -> CtrModel:
    """Array-based training path; same contract as train()."""
    if config is None:
        config = TrainConfig()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if X.ndim != 2:
        raise ValidationError("X must be a 2-d array")
    if not np.all(np.isfinite(X)):
        raise ValidationError("features must all be finite")
    if not np.all((y == 0) | (y == 1)):
        raise ValidationError("labels must be 0 or 1")
    if np.any(w <= 0) or not np.all(np.isfinite(w)):
        raise ValidationError("weights must be finite and > 0")
    if y.min() == y.max():
        raise ValidationError("degenerate labels: need at least one instance per class")

    w_norm = w / w.sum()
    means = w_norm @ X
    variances = w_norm @ (X - means) ** 2
    stds = np.sqrt(variances)
    stds[stds == 0.0] = 1.0
    Xs = (X - means) / stds

    theta, intercept = _fit_standardized(Xs, y, w, config)
    return CtrModel(
        coefficients=theta, intercept=intercept, feature_means=means, feature_stds=stds
    )


def predict(model: CtrModel, features: Sequence[float]) -> float:
    """pCTR strictly inside (0, 1) for one augmented feature vector."""
    x = np.asarray(features, dtype=np.float64)
    if x.shape != (model.dim,):
        raise ValidationError(
            f"feature length {x.shape} does not match model dimension {model.dim}"
        )
    z = (x - model.feature_means) / model.feature_stds
    p = float(_sigmoid(np.atleast_1d(z @ model.coefficients + model.intercept))[0])
    return min(max(p, 1e-300), 1.0 - 1e-16)


def predict_many(model: CtrModel, X: np.ndarray) -> np.ndarray:
    """Vectorized predict over rows of X."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.dim:
        raise ValidationError(f"X must be (n, {model.dim})")
    Z = (X - model.feature_means) / model.feature_stds
    p = _sigmoid(Z @ model.coefficients + model.intercept)
    return np.clip(p, 1e-300, 1.0 - 1e-16)
