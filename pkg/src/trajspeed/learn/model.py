"""Trained-model wrapper: uniform scoring, prediction, JSON serialization.

Serialized models are versioned JSON documents with trees as nested nodes;
serialization is canonical (sorted keys), so a model hash doubles as a
reproducibility check across runs.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .boosting import BoostedEnsemble
from .forest import ForestEnsemble
from .linear import LinearScorer
from .tree import DecisionTree

FORMAT_VERSION = 1
VARIANTS = ("lda", "svm", "rf", "gbm", "xgb")


@dataclass
class TrainedModel:
    variant: str
    feature_names: list
    n_classes: int
    payload: object  # LinearScorer | ForestEnsemble | BoostedEnsemble

    def predict_scores(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != len(self.feature_names):
            raise ValueError(f"expected {len(self.feature_names)} feature columns, got {X.shape}")
        if isinstance(self.payload, LinearScorer):
            return self.payload.margins(X)
        if isinstance(self.payload, ForestEnsemble):
            return self.payload.vote_shares(X)
        return self.payload.margins(X)

    def predict(self, X):
        scores = self.predict_scores(X)
        return np.argmax(scores, axis=1).astype(np.int64), scores

    @property
    def is_tree_model(self) -> bool:
        return self.variant in ("rf", "gbm", "xgb")

    def class_trees(self, k: int):
        """(tree, per-node scalar values) pairs contributing to class k margins."""
        if isinstance(self.payload, BoostedEnsemble):
            eta = self.payload.learning_rate
            for round_trees in self.payload.trees:
                tree = round_trees[k]
                yield tree, tree.leaf_value * eta
        elif isinstance(self.payload, ForestEnsemble):
            n_trees = len(self.payload.trees)
            for tree in self.payload.trees:
                dist = np.atleast_2d(tree.leaf_value)
                votes = (np.argmax(dist, axis=1) == k) & (tree.feature < 0)
                yield tree, votes.astype(np.float64) / n_trees
        else:
            raise TypeError(f"{self.variant} is not a tree model")

    def class_offset(self, k: int) -> float:
        if isinstance(self.payload, BoostedEnsemble):
            return float(self.payload.base[k])
        return 0.0

    def all_trees(self):
        if isinstance(self.payload, BoostedEnsemble):
            for round_trees in self.payload.trees:
                yield from round_trees
        elif isinstance(self.payload, ForestEnsemble):
            yield from self.payload.trees
        else:
            raise TypeError(f"{self.variant} is not a tree model")

    @property
    def total_realized_gain(self) -> float:
        return float(self.payload.total_gain)

    # -- serialization --------------------------------------------------

    def to_dict(self) -> dict:
        doc = {
            "format_version": FORMAT_VERSION,
            "variant": self.variant,
            "feature_names": list(self.feature_names),
            "n_classes": self.n_classes,
        }
        p = self.payload
        if isinstance(p, LinearScorer):
            doc["payload"] = {
                "weights": p.weights.tolist(),
                "bias": p.bias.tolist(),
                "shift": None if p.shift is None else p.shift.tolist(),
                "scale": None if p.scale is None else p.scale.tolist(),
                "objective_trace": list(p.objective_trace),
            }
        elif isinstance(p, ForestEnsemble):
            doc["payload"] = {"trees": [t.to_dict() for t in p.trees], "total_gain": p.total_gain}
        else:
            doc["payload"] = {
                "base": p.base.tolist(),
                "learning_rate": p.learning_rate,
                "trees": [[t.to_dict() for t in row] for row in p.trees],
                "train_loss": list(p.train_loss),
                "train_objective": list(p.train_objective),
                "total_gain": p.total_gain,
            }
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    def model_hash(self) -> str:
        return hashlib.sha256(self.to_json().encode("utf-8")).hexdigest()

    @classmethod
    def from_dict(cls, doc: dict) -> "TrainedModel":
        if doc.get("format_version") != FORMAT_VERSION:
            raise ValueError(f"unsupported model format version {doc.get('format_version')!r}")
        variant = doc["variant"]
        raw = doc["payload"]
        payload: object
        if variant in ("lda", "svm"):
            payload = LinearScorer(
                weights=np.asarray(raw["weights"]),
                bias=np.asarray(raw["bias"]),
                classes=np.arange(doc["n_classes"]),
                shift=None if raw["shift"] is None else np.asarray(raw["shift"]),
                scale=None if raw["scale"] is None else np.asarray(raw["scale"]),
                objective_trace=list(raw.get("objective_trace", [])),
            )
        elif variant == "rf":
            payload = ForestEnsemble(
                n_classes=doc["n_classes"],
                trees=[DecisionTree.from_dict(t) for t in raw["trees"]],
                total_gain=raw.get("total_gain", 0.0),
            )
        elif variant in ("gbm", "xgb"):
            payload = BoostedEnsemble(
                n_classes=doc["n_classes"],
                base=np.asarray(raw["base"]),
                learning_rate=raw["learning_rate"],
                trees=[[DecisionTree.from_dict(t) for t in row] for row in raw["trees"]],
                train_loss=list(raw.get("train_loss", [])),
                train_objective=list(raw.get("train_objective", [])),
                total_gain=raw.get("total_gain", 0.0),
            )
        else:
            raise ValueError(f"unknown model variant {variant!r}")
        return cls(variant=variant, feature_names=doc["feature_names"], n_classes=doc["n_classes"], payload=payload)


def predict(model: TrainedModel, X):
    """Per row: K finite scores and the argmax level (ties to lowest index)."""
    return model.predict(X)


def save_model(model: TrainedModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(model.to_json())


def load_model(path) -> TrainedModel:
    with open(path, "r", encoding="utf-8") as fh:
        return TrainedModel.from_dict(json.load(fh))


def wrap_model(variant: str, payload, feature_names, n_classes: int = 6) -> TrainedModel:
    if variant not in VARIANTS:
        raise ValueError(f"unknown model variant {variant!r}")
    return TrainedModel(variant=variant, feature_names=list(feature_names), n_classes=n_classes, payload=payload)
