"""Binary learners with importance weights, plus the costing resampler.

Four learner kinds are provided behind one ``learn`` entry point:

* ``logistic_sgd`` - logistic loss minimized by seeded per-example SGD
* ``decision_stump`` - best single-feature threshold by weighted error
* ``constant`` - fixed bit
* ``bayes_oracle`` - exact per-context decision table; only meaningful on
  enumerable (hashable) contexts, either supplied directly or estimated by
  exact weighted majority on the training set

The costing transform turns an importance-weighted set into an unweighted one
by rejection sampling on the weights.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np


class ZeroWeightError(ValueError):
    """Raised when an importance-weighted quantity is undefined (total weight 0)."""


@dataclass(frozen=True)
class CostingConfig:
    """Rejection-sampling setup: normalization rule and seed.

    ``max_weight`` keeps each example with probability w / max(w), which keeps
    as much of the sample as possible; ``unit_cap`` uses min(w, 1) directly.
    """

    normalization: str = "max_weight"
    seed: int = 0

    def __post_init__(self):
        if self.normalization not in ("max_weight", "unit_cap"):
            raise ValueError(f"unknown normalization {self.normalization!r}")


def costing_resample(X, y, w, config: CostingConfig = CostingConfig()):
    """Keep each example independently with probability proportional to weight.

    Returns (X_kept, y_kept). Kept examples carry no weight. A set whose
    weights are all zero yields an empty sample and a warning.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    w = np.asarray(w, dtype=float)
    if w.size and (not np.isfinite(w).all() or (w < 0).any()):
        raise ValueError("weights must be finite and nonnegative")
    if w.size == 0 or w.max() == 0.0:
        warnings.warn("all importance weights are zero; resample is empty")
        return X[:0], y[:0]
    if config.normalization == "max_weight":
        accept = w / w.max()
    else:
        accept = np.minimum(w, 1.0)
    rng = np.random.default_rng(config.seed)
    keep = rng.random(w.shape) < accept
    return X[keep], y[keep]


@dataclass(frozen=True)
class LearnerSpec:
    """Which learner to train and with what hyperparameters.

    ``oracle`` maps a context (tuple of features) to P(bit=1 | context) and is
    honored only by the bayes_oracle kind. ``use_costing`` reduces the weighted
    problem to an unweighted one by a single rejection-sampling pass before
    fitting.
    """

    kind: str = "logistic_sgd"
    lr: float = 0.1
    epochs: int = 10
    seed: int = 42
    constant_bit: int = 1
    oracle: object = None
    use_costing: bool = False
    costing: CostingConfig = field(default_factory=CostingConfig)

    def __post_init__(self):
        if self.kind not in ("logistic_sgd", "decision_stump", "constant", "bayes_oracle"):
            raise ValueError(f"unknown learner kind {self.kind!r}")
        if self.lr <= 0 or self.epochs <= 0:
            raise ValueError("lr and epochs must be positive")
        if self.constant_bit not in (0, 1):
            raise ValueError("constant_bit must be 0 or 1")


class LogisticModel:
    def __init__(self, weights, bias):
        self.weights = np.asarray(weights, dtype=float)
        self.bias = float(bias)

    def predict_one(self, x) -> int:
        z = float(np.dot(self.weights, x)) + self.bias
        return 1 if z >= 0.0 else 0

    def predict(self, X) -> np.ndarray:
        z = np.asarray(X, dtype=float) @ self.weights + self.bias
        return (z >= 0.0).astype(int)

    def params(self) -> dict:
        return {"type": "logistic", "weights": self.weights.tolist(), "bias": self.bias}


class StumpModel:
    """Threshold rule on one feature: bit = polarity iff x[feature] >= threshold."""

    def __init__(self, feature, threshold, polarity):
        self.feature = int(feature)
        self.threshold = float(threshold)
        self.polarity = int(polarity)

    def predict_one(self, x) -> int:
        hit = x[self.feature] >= self.threshold
        return self.polarity if hit else 1 - self.polarity

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        hit = X[:, self.feature] >= self.threshold
        return np.where(hit, self.polarity, 1 - self.polarity).astype(int)

    def params(self) -> dict:
        return {
            "type": "stump",
            "feature": self.feature,
            "threshold": self.threshold,
            "polarity": self.polarity,
        }


class ConstantModel:
    def __init__(self, bit):
        self.bit = int(bit)

    def predict_one(self, x) -> int:
        return self.bit

    def predict(self, X) -> np.ndarray:
        return np.full(len(X), self.bit, dtype=int)

    def params(self) -> dict:
        return {"type": "constant", "bit": self.bit}


class TruthTableModel:
    """Per-context decision table; unseen contexts fall back to the default bit."""

    def __init__(self, table, default_bit=1):
        self.table = dict(table)
        self.default_bit = int(default_bit)

    @staticmethod
    def context_key(x) -> tuple:
        return tuple(float(v) for v in x)

    def predict_one(self, x) -> int:
        return self.table.get(self.context_key(x), self.default_bit)

    def predict(self, X) -> np.ndarray:
        return np.array([self.predict_one(row) for row in np.asarray(X, dtype=float)], dtype=int)

    def params(self) -> dict:
        return {
            "type": "truth_table",
            "table": [[list(ctx), bit] for ctx, bit in sorted(self.table.items())],
            "default_bit": self.default_bit,
        }


def model_from_params(params: dict):
    t = params["type"]
    if t == "logistic":
        return LogisticModel(params["weights"], params["bias"])
    if t == "stump":
        return StumpModel(params["feature"], params["threshold"], params["polarity"])
    if t == "constant":
        return ConstantModel(params["bit"])
    if t == "truth_table":
        return TruthTableModel({tuple(ctx): bit for ctx, bit in params["table"]}, params["default_bit"])
    raise ValueError(f"unknown model type {t!r}")


def _sigmoid(z: float) -> float:
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


def _fit_logistic(X, y, w, spec: LearnerSpec) -> LogisticModel:
    n, f = X.shape
    rng = np.random.default_rng(spec.seed)
    wv = np.zeros(f)
    bias = 0.0
    for epoch in range(spec.epochs):
        lr = spec.lr / (1.0 + epoch)  # harmonic decay settles the last iterate
        for i in rng.permutation(n):
            xi = X[i]
            g = (_sigmoid(float(np.dot(wv, xi)) + bias) - y[i]) * w[i]
            if g != 0.0:
                wv -= lr * g * xi
                bias -= lr * g
    return LogisticModel(wv, bias)


def _fit_stump(X, y, w, spec: LearnerSpec) -> StumpModel:
    n, f = X.shape
    total = w.sum()
    best = (math.inf, 0, 0.0, 1)
    for j in range(f):
        order = np.argsort(X[:, j], kind="stable")
        xs = X[order, j]
        mass1 = np.where(y[order] == 1, w[order], 0.0)
        mass0 = w[order] - mass1
        # err of "predict 1 iff x >= t" with t between positions i-1 and i:
        # ones below the threshold plus zeros at or above it
        ones_below = np.concatenate(([0.0], np.cumsum(mass1)))
        zeros_above = np.concatenate((np.cumsum(mass0[::-1])[::-1], [0.0]))
        errs_pos = ones_below + zeros_above
        errs_neg = total - errs_pos
        for i in range(n + 1):
            if 0 < i < n and xs[i - 1] == xs[i]:
                continue  # threshold cannot separate equal values
            if i == 0:
                t = xs[0] - 1.0 if n else 0.0
            elif i == n:
                t = xs[n - 1] + 1.0
            else:
                t = (xs[i - 1] + xs[i]) / 2.0
            for err, pol in ((errs_pos[i], 1), (errs_neg[i], 0)):
                if err < best[0] - 1e-15:
                    best = (err, j, t, pol)
    return StumpModel(best[1], best[2], best[3])


def _fit_truth_table(X, y, w, spec: LearnerSpec) -> TruthTableModel:
    if spec.oracle is not None:
        table = {
            TruthTableModel.context_key(ctx): (1 if p1 > 0.5 else 0)
            for ctx, p1 in dict(spec.oracle).items()
        }
        return TruthTableModel(table, default_bit=1)
    mass: dict[tuple, list[float]] = {}
    for xi, yi, wi in zip(X, y, w):
        key = TruthTableModel.context_key(xi)
        m = mass.setdefault(key, [0.0, 0.0])
        m[yi] += wi
    # tie goes to the left/1 side
    table = {key: (1 if m[1] >= m[0] else 0) for key, m in mass.items()}
    return TruthTableModel(table, default_bit=1)


def learn(spec: LearnerSpec, X, y, w=None):
    """Train a binary classifier per the spec; w are importance weights."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    y = np.asarray(y, dtype=int)
    w = np.ones(len(y)) if w is None else np.asarray(w, dtype=float)
    if spec.kind == "constant":
        return ConstantModel(spec.constant_bit)
    if len(y) == 0 and not (spec.kind == "bayes_oracle" and spec.oracle is not None):
        raise ValueError("no training examples")
    if X.size and not np.isfinite(X).all():
        raise ValueError("nonfinite feature values")
    if spec.use_costing:
        X, y = costing_resample(X, y, w, spec.costing)
        w = np.ones(len(y))
        if len(y) == 0:
            return ConstantModel(1)
    if spec.kind == "logistic_sgd":
        return _fit_logistic(X, y, w, spec)
    if spec.kind == "decision_stump":
        return _fit_stump(X, y, w, spec)
    return _fit_truth_table(X, y, w, spec)


def predict(model, x) -> int:
    """Single-example prediction in {0, 1}."""
    return model.predict_one(np.asarray(x, dtype=float))


def weighted_error(model, X, y, w=None) -> float:
    """Importance-weighted error sum(w * [pred != y]) / sum(w)."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    w = np.ones(len(y)) if w is None else np.asarray(w, dtype=float)
    total = w.sum()
    if total == 0.0:
        raise ZeroWeightError("total importance weight is zero")
    wrong = model.predict(X) != y
    return float(np.where(wrong, w, 0.0).sum() / total)


def truth_table_best_error(X, y, w=None) -> float:
    """Smallest weighted error any per-context decision table can reach."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    w = np.ones(len(y)) if w is None else np.asarray(w, dtype=float)
    total = w.sum()
    if total == 0.0:
        raise ZeroWeightError("total importance weight is zero")
    mass: dict[tuple, list[float]] = {}
    for xi, yi, wi in zip(X, y, w):
        m = mass.setdefault(TruthTableModel.context_key(xi), [0.0, 0.0])
        m[yi] += wi
    return float(sum(min(m) for m in mass.values()) / total)


def weighted_regret(model, X, y, w=None, best: float | None = None) -> float:
    """Weighted error minus the best achievable weighted error.

    When ``best`` is omitted it is the exact truth-table minimum, which is the
    right comparison class for enumerable contexts.
    """
    if best is None:
        best = truth_table_best_error(X, y, w)
    return weighted_error(model, X, y, w) - best
