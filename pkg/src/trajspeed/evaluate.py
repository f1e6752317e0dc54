"""Multiclass evaluation: confusion matrix, per-class metrics, within-k accuracy."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd


def confusion_matrix(truth, pred, n_classes: int) -> np.ndarray:
    """K x K count grid: rows are true classes, columns predicted classes."""
    truth = np.asarray(truth, dtype=np.int64)
    pred = np.asarray(pred, dtype=np.int64)
    if truth.shape != pred.shape:
        raise ValueError(f"label vectors differ in length: {truth.shape} vs {pred.shape}")
    if len(truth) and (truth.min() < 0 or truth.max() >= n_classes or pred.min() < 0 or pred.max() >= n_classes):
        raise ValueError(f"labels out of range [0, {n_classes})")
    matrix = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(matrix, (truth, pred), 1)
    return matrix


@dataclass
class ClassMetrics:
    level: int
    precision: float
    recall: float
    f1: float
    support: int
    # True when a 0/0 metric was reported as 0 (no predictions or no truth
    # rows for the class).
    degenerate: bool


@dataclass
class EvaluationReport:
    matrix: np.ndarray
    per_class: list
    accuracy: float
    within_1: float

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "within_1_accuracy": self.within_1,
            "confusion_matrix": self.matrix.tolist(),
            "per_class": [
                {
                    "level": m.level,
                    "precision": m.precision,
                    "recall": m.recall,
                    "f1": m.f1,
                    "support": m.support,
                    "degenerate": m.degenerate,
                }
                for m in self.per_class
            ],
        }

    def to_frame(self, model_name: str) -> pd.DataFrame:
        """One row per (model, level): the published report layout."""
        rows = [
            {
                "Model": model_name,
                "Speeding Level": m.level,
                "Precision": m.precision,
                "Recall": m.recall,
                "F1-Score": m.f1,
                "Accuracy": self.accuracy,
                "Support": m.support,
                "Degenerate": m.degenerate,
            }
            for m in self.per_class
        ]
        return pd.DataFrame(rows)


def f1_score(precision: float, recall: float) -> float:
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def class_metrics(matrix: np.ndarray) -> EvaluationReport:
    """One-vs-rest precision/recall/F1 per class; 0/0 cells report 0, flagged."""
    matrix = np.asarray(matrix)
    total = int(matrix.sum())
    if total == 0:
        raise ValueError("empty confusion matrix")
    diag = np.diag(matrix).astype(np.float64)
    pred_totals = matrix.sum(axis=0).astype(np.float64)
    true_totals = matrix.sum(axis=1).astype(np.float64)
    per_class = []
    for k in range(matrix.shape[0]):
        tp = diag[k]
        degenerate = pred_totals[k] == 0 or true_totals[k] == 0
        precision = tp / pred_totals[k] if pred_totals[k] > 0 else 0.0
        recall = tp / true_totals[k] if true_totals[k] > 0 else 0.0
        per_class.append(
            ClassMetrics(
                level=k,
                precision=float(precision),
                recall=float(recall),
                f1=f1_score(float(precision), float(recall)),
                support=int(true_totals[k]),
                degenerate=bool(degenerate),
            )
        )
    return EvaluationReport(
        matrix=matrix,
        per_class=per_class,
        accuracy=float(diag.sum() / total),
        within_1=within_k_accuracy(matrix, 1),
    )


def within_k_accuracy(matrix: np.ndarray, k: int) -> float:
    """Share of rows classified within k levels of the truth."""
    matrix = np.asarray(matrix)
    total = matrix.sum()
    if total == 0:
        return 0.0
    i, j = np.indices(matrix.shape)
    return float(matrix[np.abs(i - j) <= k].sum() / total)
