"""Multiclass gradient boosting, first-order (GBM) and second-order (XGB).

Both trainers boost K-class softmax log-loss with one regression tree per
class per round, accumulating margins under a learning rate on top of
log-prior base scores.  They differ in what drives tree structure:

* GBM grows trees on the negative gradient alone (unit hessians, no
  regularization in the splits) and then sets each leaf with a Newton step
  over the rows it captured - the classic first-order scheme;
* XGB feeds exact per-row gradients g_i = p_i - y_i and diagonal hessians
  h_i = p_i (1 - p_i) of the softmax log-loss into the regularized split gain
  (lambda, gamma, min_child_weight), so structure and leaf weights both come
  from the second-order objective.

Training logs record per-round training loss (GBM) and the regularized
objective loss + sum_t [gamma * T_t + 0.5 * lambda * sum w^2] (XGB), plus the
total realized split gain for cross-checking feature importances.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..config import BoostParams
from .tree import DecisionTree, TreeParams, grow_regression_tree, reassign_leaves_newton

LOG_ZERO = -745.0  # exp() underflows to 0.0 below this


def softmax_rows(scores: np.ndarray) -> np.ndarray:
    z = scores - scores.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def multiclass_log_loss(scores: np.ndarray, y: np.ndarray) -> float:
    """Mean negative log-likelihood of the true class under softmax scores."""
    z = scores - scores.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(z).sum(axis=1))
    return float(np.mean(log_norm - z[np.arange(len(y)), y]))


def softmax_gradient_hessian(scores: np.ndarray, y: np.ndarray):
    """Per-row, per-class gradient and diagonal hessian of softmax log-loss.

    g_ik = p_ik - [y_i = k],  h_ik = p_ik (1 - p_ik).
    """
    p = softmax_rows(scores)
    g = p.copy()
    g[np.arange(len(y)), y] -= 1.0
    h = p * (1.0 - p)
    return g, h


def base_scores(y: np.ndarray, n_classes: int) -> np.ndarray:
    """Class log-priors from the training labels (stabilizes early rounds)."""
    counts = np.bincount(y, minlength=n_classes).astype(np.float64)
    priors = counts / counts.sum()
    return np.where(priors > 0.0, np.log(np.maximum(priors, 1e-323)), LOG_ZERO)


@dataclass
class BoostedEnsemble:
    """Trees indexed [round][class], plus everything needed to score rows."""

    n_classes: int
    base: np.ndarray  # (K,) base scores
    learning_rate: float
    trees: list = field(default_factory=list)  # list of per-round lists
    train_loss: list = field(default_factory=list)  # per-round training loss
    train_objective: list = field(default_factory=list)  # loss + penalty (xgb)
    total_gain: float = 0.0

    def margins(self, X: np.ndarray) -> np.ndarray:
        scores = np.tile(self.base, (len(X), 1))
        for round_trees in self.trees:
            for k, tree in enumerate(round_trees):
                scores[:, k] += self.learning_rate * tree.predict(X)
        return scores


def _omega_penalty(tree: DecisionTree, lam: float, eta: float) -> float:
    """gamma-free part of Omega for the scaled weights actually added."""
    is_leaf = tree.feature < 0
    w = tree.leaf_value[is_leaf] * eta
    return 0.5 * lam * float((w * w).sum())


def train_boosted(X, y, params: BoostParams, n_classes: int, second_order: bool) -> BoostedEnsemble:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    params.validate()
    ensemble = BoostedEnsemble(
        n_classes=n_classes,
        base=base_scores(y, n_classes),
        learning_rate=params.learning_rate,
    )
    scores = np.tile(ensemble.base, (len(X), 1))
    gains: list = []
    penalty = 0.0
    if second_order:
        tree_params = TreeParams(
            max_depth=params.max_depth,
            reg_lambda=params.reg_lambda,
            reg_gamma=params.reg_gamma,
            min_child_weight=params.min_child_weight,
        )
    else:
        tree_params = TreeParams(
            max_depth=params.max_depth,
            reg_lambda=0.0,
            reg_gamma=0.0,
            min_child_weight=params.min_child_weight,
        )
    for _ in range(params.n_trees):
        g, h = softmax_gradient_hessian(scores, y)
        round_trees = []
        for k in range(n_classes):
            if second_order:
                tree = grow_regression_tree(X, g[:, k], h[:, k], tree_params)
            else:
                tree = grow_regression_tree(X, g[:, k], np.ones(len(X)), tree_params)
                reassign_leaves_newton(tree, X, g[:, k], h[:, k], lam=0.0)
            round_trees.append(tree)
            gains.extend(tree.gain[tree.feature >= 0].tolist())
            if second_order:
                penalty += params.reg_gamma * tree.n_leaves + _omega_penalty(tree, params.reg_lambda, params.learning_rate)
            scores[:, k] += params.learning_rate * tree.predict(X)
        ensemble.trees.append(round_trees)
        loss = multiclass_log_loss(scores, y)
        ensemble.train_loss.append(loss)
        ensemble.train_objective.append(loss + penalty / len(X))
    ensemble.total_gain = math.fsum(gains)
    return ensemble


def train_gbm(X, y, params: BoostParams, n_classes: int = 6) -> BoostedEnsemble:
    """First-order gradient boosting (structure from gradients, Newton leaves)."""
    return train_boosted(X, y, params, n_classes, second_order=False)


def train_xgb(X, y, params: BoostParams, n_classes: int = 6) -> BoostedEnsemble:
    """Second-order regularized boosting with the exact softmax g/h statistics."""
    return train_boosted(X, y, params, n_classes, second_order=True)


def quadratic_leaf_objective(tree: DecisionTree, X, g, h, lam: float, gamma: float, eta: float = 1.0) -> float:
    """Second-order surrogate objective of one tree at its current leaf weights.

    sum_i [ g_i * w_q(i) + 0.5 * h_i * w_q(i)^2 ] + gamma * T + 0.5 * lambda * sum w^2,
    evaluated on the unscaled weights (eta folds in linearly for callers that
    want the deployed scale).  w* = -G/(H+lambda) minimizes this exactly.
    """
    leaves = tree.apply(np.asarray(X, dtype=np.float64))
    w = tree.leaf_value[leaves] * eta
    is_leaf = tree.feature < 0
    leaf_w = tree.leaf_value[is_leaf] * eta
    return float(
        (np.asarray(g) * w + 0.5 * np.asarray(h) * w * w).sum()
        + gamma * int(is_leaf.sum())
        + 0.5 * lam * float((leaf_w * leaf_w).sum())
    )
