"""Grid tuning of tree depth and count on a seeded internal holdout."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from ..config import BoostParams, TuneConfig
from .boosting import train_gbm, train_xgb
from .split import split_dataset

_TRAINERS = {"gbm": train_gbm, "xgb": train_xgb}


@dataclass
class TuneTrial:
    max_depth: int
    n_trees: int
    holdout_accuracy: float


def tune(
    X,
    y,
    cfg: TuneConfig,
    base_params: BoostParams,
    n_classes: int = 6,
    trainer: str = "xgb",
):
    """Evaluate every (max_depth, n_trees) cell; return (best params, trials).

    Ties resolve to the smaller tree count, then the smaller depth.  The full
    grid of holdout accuracies is returned for logging.
    """
    if not cfg.max_depth_grid or not cfg.n_trees_grid:
        raise ValueError("tuning grid must be non-empty")
    train_fn = _TRAINERS[trainer]
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    split = split_dataset(y, cfg.holdout_ratio, cfg.seed, stratified=True)
    Xtr, ytr = X[split.train_idx], y[split.train_idx]
    Xho, yho = X[split.test_idx], y[split.test_idx]
    trials = []
    best = None
    cells = sorted((n, d) for n in cfg.n_trees_grid for d in cfg.max_depth_grid)
    for n_trees, depth in cells:
        params = dataclasses.replace(base_params, n_trees=n_trees, max_depth=depth)
        ensemble = train_fn(Xtr, ytr, params, n_classes=n_classes)
        pred = np.argmax(ensemble.margins(Xho), axis=1)
        acc = float((pred == yho).mean())
        trials.append(TuneTrial(max_depth=depth, n_trees=n_trees, holdout_accuracy=acc))
        if best is None or acc > best[0]:  # strict: first seen wins ties
            best = (acc, params)
    return best[1], trials
