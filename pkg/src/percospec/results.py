"""Result containers and batch-mean error estimation."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .rng import SeedSpec

N_BATCHES = 32


@dataclass(frozen=True)
class EstimatorResult:
    """A Monte Carlo estimate with its standard error and provenance."""

    estimate: float
    stderr: float
    n: int
    seed: SeedSpec
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.stderr < 0:
            raise ValueError("stderr must be nonnegative")
        if self.n < 1:
            raise ValueError("replica count must be >= 1")

    def __str__(self):
        return f"{self.estimate:.6g} +- {self.stderr:.2g} (n={self.n})"


def bernoulli_result(hits: int, n: int, seed: SeedSpec, **meta) -> EstimatorResult:
    p = hits / n
    se = float(np.sqrt(p * (1.0 - p) / n))
    return EstimatorResult(p, se, n, seed, meta)


def batch_means(values: np.ndarray, n_batches: int = N_BATCHES):
    """(mean, stderr) via replica-level batching.

    Batches are assigned by replica index, so paired estimators computed on
    the same replicas get comparable batch structure.
    """
    values = np.asarray(values, dtype=float)
    n = len(values)
    if n == 0:
        raise ValueError("no samples")
    k = min(n_batches, n)
    idx = (np.arange(n) * k) // n
    sums = np.bincount(idx, weights=values, minlength=k)
    counts = np.bincount(idx, minlength=k)
    bm = sums / counts
    mean = float(values.mean())
    if k < 2:
        return mean, float("inf")
    se = float(bm.std(ddof=1) / np.sqrt(k))
    return mean, se


def batch_ratio(num: np.ndarray, den: np.ndarray, n_batches: int = N_BATCHES):
    """(ratio, stderr) for mean(num)/mean(den) via batched jackknife-style deltas."""
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    n = len(num)
    if den.sum() <= 0:
        raise ZeroDivisionError("denominator has zero total mass")
    k = min(n_batches, n)
    idx = (np.arange(n) * k) // n
    ns = np.bincount(idx, weights=num, minlength=k)
    ds = np.bincount(idx, weights=den, minlength=k)
    ratio = float(num.sum() / den.sum())
    valid = ds > 0
    if valid.sum() < 2:
        return ratio, float("inf")
    ratios = ns[valid] / ds[valid]
    se = float(np.sqrt(np.sum((ratios - ratio) ** 2) / (valid.sum() - 1) / valid.sum()))
    return ratio, se
