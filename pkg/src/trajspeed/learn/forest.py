"""Random forest: bagged Gini trees with per-split feature subsampling."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..config import ForestParams
from .tree import DecisionTree, TreeParams, grow_classification_tree


@dataclass
class ForestEnsemble:
    n_classes: int
    trees: list = field(default_factory=list)
    total_gain: float = 0.0

    def vote_shares(self, X: np.ndarray) -> np.ndarray:
        """Per-class fraction of trees voting for that class (hard voting).

        Each tree votes its leaf's majority class; argmax ties inside a leaf
        resolve to the lowest class index, as does the final vote.
        """
        X = np.asarray(X, dtype=np.float64)
        shares = np.zeros((len(X), self.n_classes))
        for tree in self.trees:
            dist = tree.predict(X)
            votes = np.argmax(dist, axis=1)
            shares[np.arange(len(X)), votes] += 1.0
        return shares / len(self.trees)


def train_rf(X, y, params: ForestParams, n_classes: int = 6) -> ForestEnsemble:
    """Bootstrap + random feature selection; prediction is the majority vote."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if params.n_trees < 1:
        raise ValueError("n_trees must be >= 1")
    d = X.shape[1]
    mtry = params.mtry if params.mtry is not None else max(1, math.ceil(math.sqrt(d)))
    if not (1 <= mtry <= d):
        raise ValueError(f"mtry must lie in [1, {d}], got {mtry}")
    tree_params = TreeParams(max_depth=params.max_depth, min_child_weight=1.0, mtry=mtry if mtry < d else None)
    ensemble = ForestEnsemble(n_classes=n_classes)
    seeds = np.random.SeedSequence(params.seed).spawn(params.n_trees)
    gains = []
    for t in range(params.n_trees):
        rng = np.random.default_rng(seeds[t])
        if params.bootstrap:
            rows = rng.integers(0, len(X), size=len(X))
        else:
            rows = np.arange(len(X))
        tree = grow_classification_tree(X[rows], y[rows], n_classes, tree_params, rng=rng)
        ensemble.trees.append(tree)
        gains.extend(tree.gain[tree.feature >= 0].tolist())
    ensemble.total_gain = math.fsum(gains)
    return ensemble
