"""Linear change classifier: L2-regularized hinge loss, trained by
deterministic dual coordinate descent.

The bias is folded in as an augmented constant feature, so it is regularized
together with the weights and the dual stays a simple box-constrained QP.
Given identical inputs the solver runs an identical sweep order, which makes
retraining bit-for-bit reproducible across sessions and restarts.

Class probabilities are the plain sigmoid of the margin and its complement
(two-class softmax over (s, 0) collapses to the sigmoid), clamped away from
{0, 1} so downstream logs stay finite.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

PROB_EPS = 1e-12

_TOL = 1e-8
_MAX_SWEEPS = 20000


@dataclass
class ClassifierModel:
    """Trained linear scorer: score(x) = weights . x + bias."""

    weights: np.ndarray
    bias: float
    reg_c: float = 1.0
    trained_on: int = 0
    degenerate: bool = False

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if not np.all(np.isfinite(self.weights)) or not np.isfinite(self.bias):
            raise ValueError("model parameters must be finite")
        if self.reg_c <= 0:
            raise ValueError("reg_c must be positive")

    @property
    def d(self) -> int:
        return self.weights.shape[0]

    def to_record(self) -> dict:
        return {
            "d": self.d,
            "weights": [float(v) for v in self.weights],
            "bias": float(self.bias),
            "reg_c": float(self.reg_c),
            "degenerate": bool(self.degenerate),
            "trained_on": int(self.trained_on),
        }

    @classmethod
    def from_record(cls, rec: dict) -> "ClassifierModel":
        model = cls(
            weights=np.array(rec["weights"], dtype=np.float64),
            bias=float(rec["bias"]),
            reg_c=float(rec.get("reg_c", 1.0)),
            trained_on=int(rec.get("trained_on", 0)),
            degenerate=bool(rec.get("degenerate", False)),
        )
        if model.d != int(rec["d"]):
            raise ValueError("weight vector length disagrees with recorded d")
        return model


def _check_dim(model: ClassifierModel, x: np.ndarray):
    if x.shape[-1] != model.d:
        raise ValueError(
            f"feature vector length {x.shape[-1]} does not match model d={model.d}")


def score(model: ClassifierModel, x) -> float:
    x = np.asarray(x, dtype=np.float64)
    _check_dim(model, x)
    return float(x @ model.weights + model.bias)


def score_many(model: ClassifierModel, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    _check_dim(model, X)
    return X @ model.weights + model.bias


def _clamp(p):
    return np.clip(p, PROB_EPS, 1.0 - PROB_EPS)


def probabilities(model: ClassifierModel, x):
    """(p_change, p_no_change) at x, each clamped to [eps, 1 - eps]."""
    s = score(model, x)
    raw = float(1.0 / (1.0 + np.exp(-s)))
    return float(_clamp(raw)), float(_clamp(1.0 - raw))


def scoring_matrix(model: ClassifierModel, D) -> np.ndarray:
    """2 x K matrix whose column k is (p_change, p_no_change) at exemplar k."""
    s = score_many(model, D)
    raw = 1.0 / (1.0 + np.exp(-s))
    return np.vstack([_clamp(raw), _clamp(1.0 - raw)])


def probability_gradient(model: ClassifierModel, x, class_index: int) -> np.ndarray:
    """Gradient of the class probability with respect to x.

    class_index 1 is the change class: p(1-p) * weights; class 2 negates it.
    """
    if class_index not in (1, 2):
        raise ValueError("class_index must be 1 or 2")
    p, _ = probabilities(model, x)
    g = p * (1.0 - p) * model.weights
    return g if class_index == 1 else -g


def train(labeled, reg_c: float = 1.0, seed: Optional[int] = None) -> ClassifierModel:
    """Fit the hinge-loss linear model on (features, label) pairs.

    Minimizes ``0.5 * (|w|^2 + b^2) + reg_c * sum_i max(0, 1 - y_i (w.x_i + b))``
    via coordinate descent on the dual with a fixed cyclic sweep order, run to
    a projected-gradient tolerance of 1e-8. ``seed`` is accepted for interface
    symmetry with stochastic trainers and ignored. With a single class present
    the model degenerates to a constant scorer of that class (weights 0,
    bias +/-1), flagged so callers can tell.
    """
    del seed
    pairs = list(labeled)
    if not pairs:
        raise ValueError("cannot train on an empty labeled set")
    if reg_c <= 0:
        raise ValueError("reg_c must be positive")
    X = np.array([np.asarray(f, dtype=np.float64) for f, _ in pairs])
    y = np.array([float(lab) for _, lab in pairs])
    if X.ndim != 2:
        raise ValueError("feature vectors must share one length")
    n, d = X.shape
    if not np.all(np.isin(y, (-1.0, 1.0))):
        raise ValueError("labels must be -1 or +1")

    classes = np.unique(y)
    if len(classes) == 1:
        return ClassifierModel(
            weights=np.zeros(d), bias=float(classes[0]), reg_c=reg_c,
            trained_on=n, degenerate=True,
        )

    # Augmented weight vector [w, b] against features [x, 1].
    Xa = np.hstack([X, np.ones((n, 1))])
    q_diag = np.einsum("ij,ij->i", Xa, Xa)
    alpha = np.zeros(n)
    w = np.zeros(d + 1)

    for _ in range(_MAX_SWEEPS):
        max_pg = 0.0
        for i in range(n):
            g = y[i] * (Xa[i] @ w) - 1.0
            a = alpha[i]
            if a <= 0.0:
                pg = min(g, 0.0)
            elif a >= reg_c:
                pg = max(g, 0.0)
            else:
                pg = g
            if abs(pg) > max_pg:
                max_pg = abs(pg)
            if pg != 0.0:
                new_a = min(max(a - g / q_diag[i], 0.0), reg_c)
                if new_a != a:
                    w += (new_a - a) * y[i] * Xa[i]
                    alpha[i] = new_a
        if max_pg < _TOL:
            break

    return ClassifierModel(
        weights=w[:d].copy(), bias=float(w[d]), reg_c=reg_c,
        trained_on=n, degenerate=False,
    )


def primal_objective(model: ClassifierModel, labeled, reg_c: float = 1.0) -> float:
    """Value of the trained objective at the model, for optimality checks."""
    pairs = list(labeled)
    X = np.array([np.asarray(f, dtype=np.float64) for f, _ in pairs])
    y = np.array([float(lab) for _, lab in pairs])
    margins = y * (X @ model.weights + model.bias)
    hinge = np.maximum(0.0, 1.0 - margins).sum()
    reg = 0.5 * (model.weights @ model.weights + model.bias ** 2)
    return float(reg + reg_c * hinge)
