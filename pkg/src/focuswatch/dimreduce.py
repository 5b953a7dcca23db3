"""PCA over flattened normalized-landmark vectors.

Fit on the focus window of the current user; the fitted model is frozen
until the anomaly model is retrained, so the feature space stays fixed
per model.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InsufficientSamples, RankDeficient

RANK_TOL = 1e-12


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray  # (d_in,)
    components: np.ndarray  # (k, d_in), rows orthonormal
    explained_variance_ratio: np.ndarray  # (k,), non-increasing

    def __post_init__(self):
        for name in ("mean", "components", "explained_variance_ratio"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def k(self) -> int:
        return self.components.shape[0]

    @property
    def d_in(self) -> int:
        return self.components.shape[1]


def fit(samples, k: int) -> PcaModel:
    """Top-k principal components of the sample covariance (divisor n-1).

    Deterministic: components sorted by descending eigenvalue (stable for
    ties, so equal eigenvalues keep original axis order) and sign-fixed so
    each component's largest-magnitude entry is positive.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 2:
        raise InsufficientSamples("PCA needs an (n, d) matrix with n >= 2")
    n, d = x.shape
    if not 1 <= k <= min(n - 1, d):
        raise InsufficientSamples(f"k={k} must satisfy 1 <= k <= min(n-1, d)={min(n - 1, d)}")
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / (n - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(-eigvals, kind="stable")
    eigvals = np.maximum(eigvals[order], 0.0)
    eigvecs = eigvecs[:, order]
    if eigvals[k - 1] < RANK_TOL * max(eigvals[0], RANK_TOL):
        raise RankDeficient(f"k={k} exceeds numerical rank of the data")
    comps = eigvecs[:, :k].T.copy()
    # sign convention: largest-magnitude entry of each component positive
    for row in comps:
        j = int(np.argmax(np.abs(row)))
        if row[j] < 0:
            row *= -1.0
    total = float(eigvals.sum())
    ratios = eigvals[:k] / total if total > 0 else np.zeros(k)
    return PcaModel(mean=mean, components=comps, explained_variance_ratio=ratios)


def transform(model: PcaModel, x) -> np.ndarray:
    """components @ (x - mean); accepts a vector or an (n, d_in) matrix."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.shape[-1] != model.d_in:
        raise DimensionMismatch(f"expected trailing dim {model.d_in}, got {arr.shape}")
    return (arr - model.mean) @ model.components.T


def inverse_transform(model: PcaModel, y) -> np.ndarray:
    """mean + components.T @ y."""
    arr = np.asarray(y, dtype=np.float64)
    if arr.shape[-1] != model.k:
        raise DimensionMismatch(f"expected trailing dim {model.k}, got {arr.shape}")
    return arr @ model.components + model.mean
