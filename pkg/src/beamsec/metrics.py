"""MSE statistics, per-sample MSE histograms, and Pearson correlation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special


@dataclass(frozen=True)
class CorrelationResult:
    r: float
    p: float
    n: int


@dataclass(frozen=True)
class Histogram:
    bin_edges: np.ndarray
    counts: np.ndarray
    n: int
    mean: float
    std: float


def mse(Y: np.ndarray, Y_hat: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean squared error: (mean over samples, per-sample vector)."""
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    Y_hat = np.atleast_2d(np.asarray(Y_hat, dtype=np.float64))
    if Y.shape != Y_hat.shape:
        raise ValueError(f"shape mismatch: {Y.shape} vs {Y_hat.shape}")
    if Y.size == 0:
        raise ValueError("mse of empty input is undefined")
    per_sample = np.mean((Y - Y_hat) ** 2, axis=1)
    return float(per_sample.mean()), per_sample


def pearson(xs: np.ndarray, ys: np.ndarray) -> CorrelationResult:
    """Product-moment correlation with a two-sided Student-t p-value.

    p comes from t = r*sqrt((n-2)/(1-r^2)) via the regularized incomplete
    beta function; it underflows to exactly 0 for overwhelming evidence.
    """
    xs = np.asarray(xs, dtype=np.float64).ravel()
    ys = np.asarray(ys, dtype=np.float64).ravel()
    if xs.shape != ys.shape:
        raise ValueError(f"length mismatch: {xs.size} vs {ys.size}")
    n = xs.size
    if n < 3:
        raise ValueError(f"need at least 3 points, got {n}")
    xd = xs - xs.mean()
    yd = ys - ys.mean()
    sx = np.sqrt((xd * xd).sum())
    sy = np.sqrt((yd * yd).sum())
    if sx == 0.0 or sy == 0.0:
        raise ValueError("undefined correlation: constant series")
    r = float((xd * yd).sum() / (sx * sy))
    r = max(-1.0, min(1.0, r))
    df = n - 2
    if abs(r) == 1.0:
        p = 0.0
    else:
        # two-sided tail of Student t: I_{df/(df+t^2)}(df/2, 1/2)
        t2 = r * r * df / (1.0 - r * r)
        p = float(special.betainc(df / 2.0, 0.5, df / (df + t2)))
    return CorrelationResult(r=r, p=p, n=n)


def histogram(values: np.ndarray, num_bins: int = 30) -> Histogram:
    """Equal-width histogram over [min, max]; the max lands in the last bin."""
    values = np.asarray(values, dtype=np.float64).ravel()
    if values.size == 0:
        raise ValueError("histogram of empty input is undefined")
    if num_bins < 1:
        raise ValueError(f"num_bins must be >= 1, got {num_bins}")
    lo, hi = float(values.min()), float(values.max())
    if lo == hi:
        # degenerate spread: single occupied unit-width bin
        hi = lo + 1.0
    counts, edges = np.histogram(values, bins=num_bins, range=(lo, hi))
    return Histogram(bin_edges=edges, counts=counts, n=values.size,
                     mean=float(values.mean()), std=float(values.std()))
