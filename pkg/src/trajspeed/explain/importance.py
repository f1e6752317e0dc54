"""Feature importance: realized split gain totals across a model's trees."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..learn.model import TrainedModel


@dataclass
class ImportanceRow:
    feature: str
    gain: float
    rank: int


@dataclass
class ImportanceTable:
    rows: list

    def __len__(self) -> int:
        return len(self.rows)

    def total_gain(self) -> float:
        return math.fsum(r.gain for r in self.rows)

    def top(self, n: int) -> list:
        return self.rows[:n]


def feature_importance(model: TrainedModel) -> ImportanceTable:
    """Sum realized split gains per feature, descending; ties by feature index.

    Only features that actually split somewhere appear; a model with zero
    trees yields an empty table.
    """
    if not model.is_tree_model:
        raise TypeError(f"feature importance requires a tree model, got '{model.variant}'")
    per_feature: dict = {}
    for tree in model.all_trees():
        internal = np.flatnonzero(tree.feature >= 0)
        for i in internal:
            per_feature.setdefault(int(tree.feature[i]), []).append(float(tree.gain[i]))
    totals = [(f, math.fsum(gains)) for f, gains in per_feature.items()]
    totals.sort(key=lambda item: (-item[1], item[0]))
    rows = [
        ImportanceRow(feature=model.feature_names[f], gain=g, rank=rank)
        for rank, (f, g) in enumerate(totals, start=1)
    ]
    return ImportanceTable(rows=rows)
