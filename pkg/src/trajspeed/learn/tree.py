"""Single decision trees: exact greedy growth in two modes.

* classification mode maximizes Gini gain and stores a class-distribution
  vector per leaf;
* boosted (regression) mode consumes per-row gradients g and hessians h and
  maximizes the second-order gain

      0.5 * [ G_L^2/(H_L+lambda) + G_R^2/(H_R+lambda) - G^2/(H+lambda) ] - gamma

  with the optimal leaf weight  w* = -G / (H + lambda).

Split search is exact over sorted unique values with midpoint thresholds (no
histogram approximation).  Ties break on the lowest feature index, then the
lowest threshold, so growth is fully deterministic.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

HESSIAN_FLOOR = 1e-12
GAIN_TOL = 1e-12


@dataclass
class TreeParams:
    max_depth: int = 6
    reg_lambda: float = 0.0
    reg_gamma: float = 0.0
    min_child_weight: float = 0.0
    mtry: Optional[int] = None  # features sampled per split (None = all)


@dataclass
class DecisionTree:
    """Array-backed binary tree; leaves hold a scalar weight or a K-vector."""

    feature: np.ndarray  # int32, -1 at leaves
    threshold: np.ndarray
    left: np.ndarray  # int32 child ids, -1 at leaves
    right: np.ndarray
    gain: np.ndarray  # realized split gain, 0 at leaves
    cover: np.ndarray  # sum of hessians (or sample count) reaching the node
    leaf_value: np.ndarray  # (n_nodes,) or (n_nodes, K); defined at leaves
    n_features: int = 0

    def __len__(self) -> int:
        return len(self.feature)

    @property
    def n_leaves(self) -> int:
        return int((self.feature < 0).sum())

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf node id per row (routing: left if x < threshold)."""
        idx = np.zeros(len(X), dtype=np.int64)
        active = self.feature[idx] >= 0
        while active.any():
            rows = np.flatnonzero(active)
            nodes = idx[rows]
            goes_left = X[rows, self.feature[nodes]] < self.threshold[nodes]
            idx[rows] = np.where(goes_left, self.left[nodes], self.right[nodes])
            active = self.feature[idx] >= 0
        return idx

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.leaf_value[self.apply(X)]

    def to_dict(self) -> dict:
        def node(i: int) -> dict:
            if self.feature[i] < 0:
                value = self.leaf_value[i]
                return {
                    "value": value.tolist() if np.ndim(value) else float(value),
                    "cover": float(self.cover[i]),
                }
            return {
                "feature": int(self.feature[i]),
                "threshold": float(self.threshold[i]),
                "gain": float(self.gain[i]),
                "cover": float(self.cover[i]),
                "left": node(int(self.left[i])),
                "right": node(int(self.right[i])),
            }

        return {"n_features": self.n_features, "root": node(0)}

    @classmethod
    def from_dict(cls, doc: dict) -> "DecisionTree":
        feature, threshold, left, right, gain, cover, values = [], [], [], [], [], [], []

        def walk(node: dict) -> int:
            i = len(feature)
            if "value" in node:
                feature.append(-1)
                threshold.append(0.0)
                left.append(-1)
                right.append(-1)
                gain.append(0.0)
                cover.append(node.get("cover", 0.0))
                values.append(node["value"])
            else:
                feature.append(node["feature"])
                threshold.append(node["threshold"])
                left.append(0)
                right.append(0)
                gain.append(node.get("gain", 0.0))
                cover.append(node.get("cover", 0.0))
                values.append(None)
                left[i] = walk(node["left"])
                right[i] = walk(node["right"])
            return i

        walk(doc["root"])
        vector = next((v for v in values if isinstance(v, list)), None)
        if vector is not None:
            leaf_value = np.zeros((len(feature), len(vector)))
            for i, v in enumerate(values):
                if v is not None:
                    leaf_value[i] = v
        else:
            leaf_value = np.asarray([0.0 if v is None else v for v in values])
        return cls(
            feature=np.asarray(feature, dtype=np.int32),
            threshold=np.asarray(threshold),
            left=np.asarray(left, dtype=np.int32),
            right=np.asarray(right, dtype=np.int32),
            gain=np.asarray(gain),
            cover=np.asarray(cover),
            leaf_value=leaf_value,
            n_features=int(doc.get("n_features", 0)),
        )


class _Builder:
    def __init__(self, value_width: int = 0):
        self.feature: list = []
        self.threshold: list = []
        self.left: list = []
        self.right: list = []
        self.gain: list = []
        self.cover: list = []
        self.values: list = []
        self.value_width = value_width

    def add(self) -> int:
        for col in (self.feature, self.left, self.right):
            col.append(-1)
        self.threshold.append(0.0)
        self.gain.append(0.0)
        self.cover.append(0.0)
        self.values.append(np.zeros(self.value_width) if self.value_width else 0.0)
        return len(self.feature) - 1

    def finish(self, n_features: int) -> DecisionTree:
        leaf_value = np.asarray(self.values)
        return DecisionTree(
            feature=np.asarray(self.feature, dtype=np.int32),
            threshold=np.asarray(self.threshold),
            left=np.asarray(self.left, dtype=np.int32),
            right=np.asarray(self.right, dtype=np.int32),
            gain=np.asarray(self.gain),
            cover=np.asarray(self.cover),
            leaf_value=leaf_value,
            n_features=n_features,
        )


def _feature_order(d: int, params: TreeParams, rng) -> np.ndarray:
    if params.mtry is None or params.mtry >= d:
        return np.arange(d)
    if rng is None:
        raise ValueError("feature subsampling requires an rng")
    return np.sort(rng.choice(d, size=params.mtry, replace=False))


def _leaf_weight(G: float, H: float, lam: float) -> float:
    denom = H + lam
    if denom < HESSIAN_FLOOR:
        return 0.0
    return -G / denom


def grow_regression_tree(X, g, h, params: TreeParams, rng=None) -> DecisionTree:
    """Second-order tree on gradients/hessians; leaves hold w* = -G/(H+lambda)."""
    X = np.asarray(X, dtype=np.float64)
    g = np.asarray(g, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    lam, gamma, mcw = params.reg_lambda, params.reg_gamma, params.min_child_weight
    builder = _Builder()
    stack = [(builder.add(), np.arange(len(X)), 0)]
    while stack:
        node, rows, depth = stack.pop()
        G = float(g[rows].sum())
        H = float(h[rows].sum())
        builder.cover[node] = H
        split = None
        if depth < params.max_depth and len(rows) > 1:
            split = _best_split_regression(X, g, h, rows, G, H, lam, gamma, mcw, _feature_order(X.shape[1], params, rng))
        if split is None:
            builder.values[node] = _leaf_weight(G, H, lam)
            continue
        gain, feat, thr = split
        goes_left = X[rows, feat] < thr
        builder.feature[node] = feat
        builder.threshold[node] = thr
        builder.gain[node] = gain
        left = builder.add()
        right = builder.add()
        builder.left[node] = left
        builder.right[node] = right
        # Right pushed first so the left subtree is numbered next (preorder).
        stack.append((right, rows[~goes_left], depth + 1))
        stack.append((left, rows[goes_left], depth + 1))
    return builder.finish(X.shape[1])


def _best_split_regression(X, g, h, rows, G, H, lam, gamma, mcw, feat_order):
    parent_score = G * G / (H + lam) if H + lam >= HESSIAN_FLOOR else 0.0
    best = None
    gr = g[rows]
    hr = h[rows]
    for f in feat_order:
        xf = X[rows, f]
        order = np.argsort(xf, kind="stable")
        xs = xf[order]
        if xs[0] == xs[-1]:
            continue
        GL = np.cumsum(gr[order])[:-1]
        HL = np.cumsum(hr[order])[:-1]
        GR = G - GL
        HR = H - HL
        valid = xs[1:] > xs[:-1]
        if mcw > 0:
            valid &= (HL >= mcw) & (HR >= mcw)
        if not valid.any():
            continue
        gains = 0.5 * (GL * GL / (HL + lam) + GR * GR / (HR + lam) - parent_score) - gamma
        gains = np.where(valid, gains, -np.inf)
        k = int(np.argmax(gains))  # first maximum: lowest threshold wins ties
        if gains[k] <= GAIN_TOL:
            continue
        if best is None or gains[k] > best[0]:  # strict: lowest feature wins ties
            best = (float(gains[k]), int(f), float(0.5 * (xs[k] + xs[k + 1])))
    return best


def grow_classification_tree(X, y, n_classes: int, params: TreeParams, rng=None) -> DecisionTree:
    """Gini-gain tree; leaves hold the class-distribution vector."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    onehot = np.zeros((len(y), n_classes))
    onehot[np.arange(len(y)), y] = 1.0
    builder = _Builder(value_width=n_classes)
    stack = [(builder.add(), np.arange(len(X)), 0)]
    min_leaf = max(1.0, params.min_child_weight)
    while stack:
        node, rows, depth = stack.pop()
        counts = onehot[rows].sum(axis=0)
        n = float(len(rows))
        builder.cover[node] = n
        pure = counts.max() == n
        split = None
        if depth < params.max_depth and not pure and len(rows) > 1:
            split = _best_split_gini(X, onehot, rows, counts, min_leaf, _feature_order(X.shape[1], params, rng))
        if split is None:
            builder.values[node] = counts / n
            continue
        gain, feat, thr = split
        goes_left = X[rows, feat] < thr
        builder.feature[node] = feat
        builder.threshold[node] = thr
        builder.gain[node] = gain
        left = builder.add()
        right = builder.add()
        builder.left[node] = left
        builder.right[node] = right
        stack.append((right, rows[~goes_left], depth + 1))
        stack.append((left, rows[goes_left], depth + 1))
    return builder.finish(X.shape[1])


def _best_split_gini(X, onehot, rows, counts, min_leaf, feat_order):
    n = float(len(rows))
    parent_score = float((counts * counts).sum()) / n
    best = None
    oh = onehot[rows]
    for f in feat_order:
        xf = X[rows, f]
        order = np.argsort(xf, kind="stable")
        xs = xf[order]
        if xs[0] == xs[-1]:
            continue
        CL = np.cumsum(oh[order], axis=0)[:-1]
        nL = np.arange(1, len(xs), dtype=np.float64)
        nR = n - nL
        CR = counts - CL
        valid = (xs[1:] > xs[:-1]) & (nL >= min_leaf) & (nR >= min_leaf)
        if not valid.any():
            continue
        # Gini gain as weighted impurity decrease, counts kept unnormalized:
        # sum_c cL^2/nL + sum_c cR^2/nR - sum_c c^2/n
        gains = (CL * CL).sum(axis=1) / nL + (CR * CR).sum(axis=1) / nR - parent_score
        gains = np.where(valid, gains, -np.inf)
        k = int(np.argmax(gains))
        if gains[k] <= GAIN_TOL:
            continue
        if best is None or gains[k] > best[0]:
            best = (float(gains[k]), int(f), float(0.5 * (xs[k] + xs[k + 1])))
    return best


def reassign_leaves_newton(tree: DecisionTree, X, g, h, lam: float = 0.0) -> None:
    """Replace leaf weights with the Newton step over each leaf's rows."""
    leaves = tree.apply(np.asarray(X, dtype=np.float64))
    g = np.asarray(g, dtype=np.float64)
    h = np.asarray(h, dtype=np.float64)
    G = np.bincount(leaves, weights=g, minlength=len(tree.feature))
    H = np.bincount(leaves, weights=h, minlength=len(tree.feature))
    is_leaf = tree.feature < 0
    values = tree.leaf_value.copy()
    for i in np.flatnonzero(is_leaf):
        values[i] = _leaf_weight(float(G[i]), float(H[i]), lam)
        tree.cover[i] = float(H[i])
    tree.leaf_value = values
