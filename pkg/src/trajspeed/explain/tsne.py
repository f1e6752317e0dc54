"""t-SNE: 2-D embedding by matching Gaussian and Student-t affinities.

Per-row Gaussian bandwidths are found by bisection until the conditional
distribution's entropy matches log(perplexity); affinities are symmetrized
and floored.  The 2-D layout minimizes KL(P || Q) by gradient descent with
momentum, per-coordinate gains, and early exaggeration, exactly the standard
recipe.  Everything is seeded, so the same input and seed give the same
embedding bytes.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..config import TsneConfig

log = logging.getLogger(__name__)

P_FLOOR = 1e-12
ENTROPY_TOL = 1e-5
MAX_BISECT = 50


@dataclass
class Embedding2D:
    coords: np.ndarray  # (n, 2)
    perplexity: float
    kl_initial: float
    kl_final: float


def _squared_distances(X: np.ndarray) -> np.ndarray:
    s = (X * X).sum(axis=1)
    D = s[:, None] + s[None, :] - 2.0 * (X @ X.T)
    np.fill_diagonal(D, 0.0)
    return np.maximum(D, 0.0)


def _conditional_p(dist_row: np.ndarray, target_entropy: float):
    """Bisection on beta = 1/(2 sigma^2) until entropy matches the target."""
    beta = 1.0
    beta_min, beta_max = -np.inf, np.inf
    p = np.zeros_like(dist_row)
    for _ in range(MAX_BISECT):
        e = np.exp(-dist_row * beta)
        total = e.sum()
        if total <= 0.0:
            p = np.full_like(dist_row, 1.0 / len(dist_row))
            entropy = np.log(len(dist_row))
        else:
            p = e / total
            nz = p > 0.0
            entropy = float(-(p[nz] * np.log(p[nz])).sum())
        diff = entropy - target_entropy
        if abs(diff) < ENTROPY_TOL:
            break
        if diff > 0:
            beta_min = beta
            beta = beta * 2.0 if beta_max == np.inf else 0.5 * (beta + beta_max)
        else:
            beta_max = beta
            beta = beta * 0.5 if beta_min == -np.inf else 0.5 * (beta + beta_min)
    return p


def _affinities(X: np.ndarray, perplexity: float) -> np.ndarray:
    n = len(X)
    D = _squared_distances(X)
    target = np.log(perplexity)
    P = np.zeros((n, n))
    idx = np.arange(n)
    for i in range(n):
        mask = idx != i
        P[i, mask] = _conditional_p(D[i, mask], target)
    P = (P + P.T) / (2.0 * n)
    return np.maximum(P, P_FLOOR)


def _kl_divergence(P: np.ndarray, Q: np.ndarray) -> float:
    mask = ~np.eye(len(P), dtype=bool)
    p = P[mask]
    q = np.maximum(Q[mask], P_FLOOR)
    return float((p * np.log(p / q)).sum())


def _student_q(Y: np.ndarray):
    num = 1.0 / (1.0 + _squared_distances(Y))
    np.fill_diagonal(num, 0.0)
    return num / num.sum(), num


def tsne_embed(X, cfg: TsneConfig) -> Embedding2D:
    """Embed rows of X into 2-D; reports initial and final KL divergence."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or not np.isfinite(X).all():
        raise ValueError("t-SNE input must be a finite 2-D matrix")
    n = len(X)
    if n < 3:
        raise ValueError(f"need at least 3 rows to embed, got {n}")
    if n < 3 * cfg.perplexity:
        log.warning("t-SNE: n=%d is small for perplexity %.1f", n, cfg.perplexity)
    rng = np.random.default_rng(cfg.seed)
    # Duplicate rows make affinities degenerate; break them with seeded jitter.
    if len(np.unique(X, axis=0)) < n:
        scale = X.std()
        X = X + rng.normal(0.0, 1e-8 * (scale if scale > 0 else 1.0), size=X.shape)
    P = _affinities(X, cfg.perplexity)

    Y = rng.normal(0.0, 1e-4, size=(n, 2))
    Q, _ = _student_q(Y)
    kl_initial = _kl_divergence(P, Q)

    update = np.zeros_like(Y)
    gains = np.ones_like(Y)
    for it in range(cfg.iters):
        exaggerate = it < cfg.exaggeration_iters
        P_eff = P * cfg.early_exaggeration if exaggerate else P
        Q, num = _student_q(Y)
        W = (P_eff - Q) * num
        grad = 4.0 * ((np.diag(W.sum(axis=1)) - W) @ Y)
        momentum = 0.5 if exaggerate else 0.8
        same_sign = np.sign(grad) == np.sign(update)
        gains = np.where(same_sign, gains * 0.8, gains + 0.2)
        gains = np.maximum(gains, 0.01)
        update = momentum * update - cfg.learning_rate * gains * grad
        Y = Y + update
        Y = Y - Y.mean(axis=0)
    Q, _ = _student_q(Y)
    kl_final = _kl_divergence(P, Q)
    return Embedding2D(coords=Y, perplexity=cfg.perplexity, kl_initial=kl_initial, kl_final=kl_final)
