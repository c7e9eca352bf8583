"""Log-linear least squares for exponential rates."""

from __future__ import annotations

from typing import NamedTuple, Sequence

import numpy as np


class ExpFit(NamedTuple):
    rate: float
    prefactor: float
    r_squared: float


def fit_exponential(xs: Sequence[float], ys: Sequence[float]) -> ExpFit:
    """Fit ``y = prefactor * exp(-rate * x)`` by least squares on ``log y``.

    Raises ``ValueError`` for fewer than 3 points or nonpositive values.
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("xs and ys must be 1-d and of equal length")
    if x.size < 3:
        raise ValueError(f"need at least 3 points, got {x.size}")
    if np.any(~np.isfinite(y)) or np.any(y <= 0):
        raise ValueError("all values must be finite and > 0")
    ly = np.log(y)
    xm = x.mean()
    sxx = np.sum((x - xm) ** 2)
    if sxx == 0:
        raise ValueError("abscissae are all equal")
    slope = np.sum((x - xm) * (ly - ly.mean())) / sxx
    intercept = ly.mean() - slope * xm
    resid = ly - (intercept + slope * x)
    sst = np.sum((ly - ly.mean()) ** 2)
    r2 = 1.0 if sst == 0 else 1.0 - np.sum(resid ** 2) / sst
    return ExpFit(float(-slope), float(np.exp(intercept)), float(r2))
