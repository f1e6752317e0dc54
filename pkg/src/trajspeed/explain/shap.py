"""Exact additive attributions for tree and linear models.

Tree attributions are Shapley values of the path-dependent tree game: with a
feature subset S fixed to the row's values, the tree is evaluated by
following splits on features in S and averaging both branches of every other
split, weighted by how the background sample divides between them.

Evaluating that game factorizes per leaf.  For leaf L with unique path
features U (duplicate occurrences merged), define per feature j in U

    one_j(x)  = 1 if x satisfies every split on j along the path, else 0
    zero_j    = product over occurrences of cover(child) / cover(parent)

so that f_S(x) = sum_L v_L * prod_{j in U} (one_j if j in S else zero_j).
Features off the path are dummies, so the Shapley sum collapses to U and

    phi_i = sum_L v_L (one_i - zero_i) sum_s  W_us * c_s(L, x)

where c_s are the coefficients of prod_{j in U \ {i}} (one_j t + zero_j) and
W_us = s! (u-1-s)! / u!.  The coefficient products are built once per leaf
and each feature's factor is divided back out, all vectorized across rows.
Local accuracy holds exactly: base_k (the mean class-k margin over the
background sample) plus the attribution row equals the model's margin.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..learn.model import TrainedModel
from ..learn.tree import DecisionTree


@dataclass
class ShapMatrix:
    """Per-class additive attributions with their base values."""

    values: np.ndarray  # (K, n, d)
    base: np.ndarray  # (K,)
    feature_names: list

    def check_local_accuracy(self, margins: np.ndarray) -> float:
        """Largest |base + sum(phi) - margin| over all rows and classes."""
        recon = self.base[:, None] + self.values.sum(axis=2)
        return float(np.abs(recon - margins.T).max())


@lru_cache(maxsize=128)
def _shapley_weights(u: int) -> np.ndarray:
    """W[s] = s! (u-1-s)! / u! for subset sizes s = 0..u-1."""
    fact = [math.factorial(i) for i in range(u + 1)]
    return np.asarray([fact[s] * fact[u - 1 - s] / fact[u] for s in range(u)])


def background_covers(tree: DecisionTree, background: np.ndarray) -> np.ndarray:
    """Background row count reaching each node (defines the zero fractions)."""
    counts = np.zeros(len(tree.feature))
    stack = [(0, np.arange(len(background)))]
    while stack:
        node, rows = stack.pop()
        counts[node] = len(rows)
        if tree.feature[node] >= 0 and len(rows):
            goes_left = background[rows, tree.feature[node]] < tree.threshold[node]
            stack.append((int(tree.left[node]), rows[goes_left]))
            stack.append((int(tree.right[node]), rows[~goes_left]))
    return counts


def _leaf_paths(tree: DecisionTree, covers: np.ndarray):
    """Per leaf: (leaf id, features u, zero fractions, split conds per feature).

    Duplicate features along a path are merged: conditions AND together and
    cover ratios multiply.  A zero-cover parent contributes ratio 0.
    """
    paths = []
    # (node, ordered feature list, {feature: [conds]}, {feature: zero product})
    stack = [(0, [], {}, {})]
    while stack:
        node, feats, conds, zeros = stack.pop()
        f = int(tree.feature[node])
        if f < 0:
            paths.append((node, list(feats), dict(conds), dict(zeros)))
            continue
        thr = float(tree.threshold[node])
        parent_cover = covers[node]
        for child, is_left in ((int(tree.left[node]), True), (int(tree.right[node]), False)):
            ratio = covers[child] / parent_cover if parent_cover > 0 else 0.0
            new_feats = feats if f in zeros else feats + [f]
            new_conds = dict(conds)
            new_conds[f] = conds.get(f, []) + [(thr, is_left)]
            new_zeros = dict(zeros)
            new_zeros[f] = zeros.get(f, 1.0) * ratio
            stack.append((child, new_feats, new_conds, new_zeros))
    return paths


def tree_expected_value(tree: DecisionTree, values: np.ndarray, covers: np.ndarray) -> float:
    """Cover-weighted mean of leaf values: the game's empty-set value."""
    if covers[0] <= 0:
        return 0.0
    is_leaf = tree.feature < 0
    return float((values[is_leaf] * covers[is_leaf]).sum() / covers[0])


def tree_shap_single(tree: DecisionTree, values: np.ndarray, X: np.ndarray, covers: np.ndarray) -> np.ndarray:
    """Shapley attributions (n, d) of one tree with scalar per-node values."""
    X = np.asarray(X, dtype=np.float64)
    n, d = X.shape
    phi = np.zeros((n, d))
    for leaf, feats, conds, zeros in _leaf_paths(tree, covers):
        v = float(values[leaf])
        u = len(feats)
        if u == 0 or v == 0.0:
            continue
        ones = np.empty((u, n))
        zero = np.empty(u)
        for j, f in enumerate(feats):
            mask = np.ones(n, dtype=bool)
            for thr, is_left in conds[f]:
                mask &= (X[:, f] < thr) if is_left else (X[:, f] >= thr)
            ones[j] = mask
            zero[j] = zeros[f]
        # Coefficients of prod_j (one_j t + zero_j), per row.
        coeffs = np.zeros((u + 1, n))
        coeffs[0] = 1.0
        for j in range(u):
            upper = coeffs[1 : j + 2] * zero[j]
            upper += coeffs[: j + 1] * ones[j]
            coeffs[1 : j + 2] = upper
            coeffs[0] *= zero[j]
        weights = _shapley_weights(u)
        for j, f in enumerate(feats):
            diff = ones[j] - zero[j]
            if not np.any(diff):
                continue
            # Divide the factor (one_j t + zero_j) back out, both ways.
            monic = np.empty((u, n))
            monic[u - 1] = coeffs[u]
            for s in range(u - 2, -1, -1):
                monic[s] = coeffs[s + 1] - zero[j] * monic[s + 1]
            if zero[j] > 0.0:
                constant = coeffs[:u] / zero[j]
            else:
                constant = np.zeros((u, n))
            reduced = np.where(ones[j].astype(bool), monic, constant)
            phi[:, f] += v * diff * (weights @ reduced)
    return phi


def _check_rows(X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if not np.isfinite(X).all():
        raise ValueError("attribution rows must be finite")
    return X


def shap_values(model: TrainedModel, X, background) -> ShapMatrix:
    """Per-class attributions for any trained model.

    Tree models use the exact tree-path algorithm with background-derived
    covers; linear models (discriminant, SVM) use the exact linear
    attribution w_j * (x_j - background_mean_j).
    """
    X = _check_rows(X)
    background = _check_rows(background)
    n, d = X.shape
    K = model.n_classes
    values = np.zeros((K, n, d))
    base = np.zeros(K)
    if model.is_tree_model:
        for k in range(K):
            base[k] = model.class_offset(k)
            for tree, node_values in model.class_trees(k):
                covers = background_covers(tree, background)
                values[k] += tree_shap_single(tree, node_values, X, covers)
                base[k] += tree_expected_value(tree, node_values, covers)
    else:
        w = model.payload.effective_weights()  # (d, K)
        bg_mean = background.mean(axis=0)
        base = model.predict_scores(background).mean(axis=0)
        for k in range(K):
            values[k] = w[:, k][None, :] * (X - bg_mean[None, :])
    return ShapMatrix(values=values, base=base, feature_names=list(model.feature_names))
