"""Seeded train/test splitting with optional stratification."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class SplitResult:
    train_idx: np.ndarray  # sorted int64
    test_idx: np.ndarray
    seed: int
    test_ratio: float

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "test_ratio": self.test_ratio,
            "train_idx": self.train_idx.tolist(),
            "test_idx": self.test_idx.tolist(),
        }


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def split_dataset(labels, test_ratio: float, seed: int, stratified: bool = False) -> SplitResult:
    """Split N rows into disjoint train/test index sets.

    ``labels`` may be a label vector (required for stratification) or a plain
    row count.  |test| = round(N * test_ratio) exactly; under stratification
    per-class test counts are assigned by largest remainder, keeping each
    within one of round(n_k * test_ratio).
    """
    if np.ndim(labels) == 0:
        n = int(labels)
        y = None
    else:
        y = np.asarray(labels)
        n = len(y)
    if n < 10:
        raise ValueError(f"need at least 10 rows to split, got {n}")
    if not (0.0 < test_ratio < 1.0):
        raise ValueError(f"test_ratio must lie in (0, 1), got {test_ratio}")
    n_test = _round_half_up(n * test_ratio)
    rng = np.random.default_rng(seed)
    if not stratified:
        perm = rng.permutation(n)
        test = perm[:n_test]
        train = perm[n_test:]
    else:
        if y is None:
            raise ValueError("stratified split requires a label vector")
        classes, counts = np.unique(y, return_counts=True)
        targets = counts * test_ratio
        base = np.floor(targets).astype(np.int64)
        remainder = n_test - int(base.sum())
        if remainder < 0 or remainder > len(classes):
            # Ratios cannot be honored exactly; trim deterministically.
            order = np.argsort(-(targets - base), kind="stable")
            take = base.copy()
            i = 0
            while take.sum() != n_test:
                take[order[i % len(order)]] += 1 if take.sum() < n_test else -1
                i += 1
        else:
            order = np.argsort(-(targets - base), kind="stable")
            take = base.copy()
            take[order[:remainder]] += 1
        test_parts, train_parts = [], []
        for cls, n_cls, t_cls in zip(classes, counts, take):
            if n_cls > 0 and t_cls >= n_cls:
                raise ValueError(f"class {cls!r} would be absent from the training split")
            idx = np.flatnonzero(y == cls)
            perm = rng.permutation(n_cls)
            test_parts.append(idx[perm[:t_cls]])
            train_parts.append(idx[perm[t_cls:]])
        test = np.concatenate(test_parts)
        train = np.concatenate(train_parts)
    return SplitResult(
        train_idx=np.sort(train).astype(np.int64),
        test_idx=np.sort(test).astype(np.int64),
        seed=seed,
        test_ratio=test_ratio,
    )
