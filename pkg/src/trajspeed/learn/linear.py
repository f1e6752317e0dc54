"""Linear classifiers: discriminant analysis and a linear soft-margin SVM.

The SVM minimizes the primal objective

    J = 0.5 * w'w + C * sum_i max(0, 1 - y_i (w'x_i + b))

per class (one-vs-rest) by deterministic full-batch subgradient descent on
internally standardized features; the kernel map is the identity (linear
kernel only).  The reported objective trace is evaluated on running-average
iterates and kept as the best-so-far, so it is non-increasing by
construction, and the returned weights are the averaged iterate that achieved
the minimum.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..config import SvmParams

log = logging.getLogger(__name__)


@dataclass
class LinearScorer:
    """Per-class linear margins: scores = X @ W + b."""

    weights: np.ndarray  # (d, K)
    bias: np.ndarray  # (K,)
    classes: np.ndarray  # class ids, ascending
    # Standardization applied before scoring (identity for LDA).
    shift: np.ndarray = None
    scale: np.ndarray = None
    objective_trace: list = field(default_factory=list)

    def margins(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if self.shift is not None:
            X = (X - self.shift) / self.scale
        return X @ self.weights + self.bias

    def effective_weights(self) -> np.ndarray:
        """Weights in raw (unstandardized) feature space."""
        if self.shift is None:
            return self.weights
        return self.weights / self.scale[:, None]

    def effective_bias(self) -> np.ndarray:
        if self.shift is None:
            return self.bias
        return self.bias - (self.shift / self.scale) @ self.weights


def train_lda(X, y, n_classes: int = 6) -> LinearScorer:
    """Gaussian linear discriminants with a pooled, ridge-stabilized covariance.

    Scores are the log-posterior discriminants
        x' S^-1 mu_k - 0.5 mu_k' S^-1 mu_k + log pi_k
    (the class-independent quadratic term is dropped).  Features constant
    across all rows are excluded with a warning; their weight is zero.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n, d = X.shape
    present = np.unique(y)
    if len(present) < 2:
        raise ValueError("discriminant analysis needs at least 2 classes present")
    keep = X.std(axis=0) > 0.0
    if not keep.all():
        log.warning("dropping %d constant feature(s) for the discriminant model", int((~keep).sum()))
    Xk = X[:, keep]
    dk = Xk.shape[1]
    means = np.zeros((n_classes, dk))
    priors = np.zeros(n_classes)
    pooled = np.zeros((dk, dk))
    for k in present:
        rows = Xk[y == k]
        means[k] = rows.mean(axis=0)
        priors[k] = len(rows) / n
        centered = rows - means[k]
        pooled += centered.T @ centered
    pooled /= max(n - len(present), 1)
    ridge = 1e-6 * np.trace(pooled) / dk
    pooled[np.diag_indices(dk)] += ridge
    solve = np.linalg.solve(pooled, means.T)  # (dk, K)
    weights = np.zeros((d, n_classes))
    weights[keep] = solve
    log_priors = np.where(priors > 0.0, np.log(np.maximum(priors, 1e-323)), -745.0)
    bias = -0.5 * np.einsum("kd,dk->k", means, solve) + log_priors
    return LinearScorer(weights=weights, bias=bias, classes=np.arange(n_classes))


def train_linear_svm(X, y, params: SvmParams, n_classes: int = 6) -> LinearScorer:
    """One-vs-rest linear soft-margin SVM by full-batch subgradient descent."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if len(np.unique(y)) < 2:
        raise ValueError("SVM training needs at least 2 classes present")
    n, d = X.shape
    shift = X.mean(axis=0)
    scale = X.std(axis=0)
    scale = np.where(scale > 0.0, scale, 1.0)
    Z = (X - shift) / scale
    C = float(params.C)
    weights = np.zeros((d, n_classes))
    bias = np.zeros(n_classes)
    trace = []
    for k in range(n_classes):
        t = np.where(y == k, 1.0, -1.0)
        w, b, obj = _svm_binary(Z, t, C, params.epochs)
        weights[:, k] = w
        bias[k] = b
        trace.append(obj)
    # One trace for the model: sum of per-class best-so-far objectives.
    combined = [float(sum(col)) for col in zip(*trace)]
    return LinearScorer(
        weights=weights, bias=bias, classes=np.arange(n_classes), shift=shift, scale=scale, objective_trace=combined
    )


def svm_objective(Z, t, w, b, C) -> float:
    margins = t * (Z @ w + b)
    hinge = np.maximum(0.0, 1.0 - margins)
    return 0.5 * float(w @ w) + C * float(hinge.sum())


def _svm_binary(Z, t, C, epochs):
    n, d = Z.shape
    lam = 1.0 / (C * n)  # Pegasos scaling of the same objective
    w = np.zeros(d)
    b = 0.0
    w_sum = np.zeros(d)
    b_sum = 0.0
    n_avg = 0
    best = (np.inf, w.copy(), b)
    trace = []
    for epoch in range(epochs):
        margins = t * (Z @ w + b)
        viol = margins < 1.0
        eta = 1.0 / (lam * (epoch + 1))
        grad_w = lam * w - (t[viol] @ Z[viol]) / n
        grad_b = -float(t[viol].sum()) / n
        w = w - eta * grad_w
        b = b - eta * grad_b
        # Suffix averaging over the second half of the run.
        if epoch >= epochs // 2:
            w_sum += w
            b_sum += b
            n_avg += 1
            w_avg = w_sum / n_avg
            b_avg = b_sum / n_avg
        else:
            w_avg, b_avg = w, b
        obj = svm_objective(Z, t, w_avg, b_avg, C)
        if obj < best[0]:
            best = (obj, w_avg.copy(), float(b_avg))
        trace.append(best[0])
    return best[1], best[2], trace
