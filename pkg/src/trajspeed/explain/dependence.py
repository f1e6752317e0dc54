"""Polynomial dependence curves: attribution value against feature value.

Least-squares fits of degrees 1 through 5 (scaled-domain solve for
conditioning); the reported fit is the one with the highest adjusted R^2,
with ties going to the lower degree.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

MAX_DEGREE = 5
CURVE_SAMPLES = 200
TIE_TOL = 1e-12


@dataclass
class DependenceCurve:
    degree: int
    coefficients: np.ndarray  # ascending powers, raw feature space
    r2: float
    adjusted_r2: float
    curve_x: np.ndarray
    curve_y: np.ndarray


def _weighted_r2(y, y_hat, w) -> float:
    resid = y - y_hat
    ss_res = float((w * resid * resid).sum())
    y_bar = float((w * y).sum() / w.sum())
    ss_tot = float((w * (y - y_bar) ** 2).sum())
    if ss_tot == 0.0:
        return 1.0
    return 1.0 - ss_res / ss_tot


def dependence_curve(feature_values, shap_column, sample_weights: Optional[np.ndarray] = None) -> DependenceCurve:
    """Best polynomial fit (degrees 1..5) of attributions vs a feature.

    Degrees with fewer than degree + 2 points are skipped; if every degree is
    skipped the data cannot support a curve and a ValueError is raised.
    """
    x = np.asarray(feature_values, dtype=np.float64)
    y = np.asarray(shap_column, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("feature and attribution vectors must be equal-length 1-D")
    w = np.ones_like(x) if sample_weights is None else np.asarray(sample_weights, dtype=np.float64)
    n = len(x)
    best = None
    for degree in range(1, MAX_DEGREE + 1):
        if n < degree + 2:
            continue
        fitted = np.polynomial.Polynomial.fit(x, y, degree, w=np.sqrt(w))
        y_hat = fitted(x)
        r2 = _weighted_r2(y, y_hat, w)
        adjusted = 1.0 - (1.0 - r2) * (n - 1) / (n - degree - 1)
        if best is None or adjusted > best[0] + TIE_TOL:
            best = (adjusted, r2, degree, fitted)
    if best is None:
        raise ValueError(f"too few points ({n}) for any polynomial degree")
    adjusted, r2, degree, fitted = best
    xs = np.linspace(float(x.min()), float(x.max()), CURVE_SAMPLES)
    return DependenceCurve(
        degree=degree,
        coefficients=fitted.convert().coef,
        r2=r2,
        adjusted_r2=adjusted,
        curve_x=xs,
        curve_y=fitted(xs),
    )
