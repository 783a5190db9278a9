"""Reduce a pair of elliptical covariances to the canonical pair (I, D).

Any f-divergence between E(g1, S1) and E(g2, S2) equals the one between
E(g1, I) and E(g2, diag(d)), where d are the eigenvalues of
S1^{-1/2} S2 S1^{-1/2} (equivalently of S2 S1^{-1}).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import linalg

from .core import DivboundError


class NotPositiveDefiniteError(DivboundError):
    pass


@dataclass(frozen=True)
class DiagonalScales:
    """The scale vector d of the reduced covariance diag(d)."""

    d: tuple[float, ...]
    d_minus: float
    d_plus: float
    sum_log_d: float

    @classmethod
    def from_values(cls, values: Sequence[float]) -> "DiagonalScales":
        arr = np.asarray(values, dtype=float).ravel()
        if arr.size == 0:
            raise ValueError("scale vector must be non-empty")
        if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
            raise ValueError("scale vector entries must be finite and positive")
        return cls(
            d=tuple(float(v) for v in arr),
            d_minus=float(arr.min()),
            d_plus=float(arr.max()),
            sum_log_d=math.fsum(math.log(v) for v in arr),
        )

    @property
    def n(self) -> int:
        return len(self.d)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.d)

    def prefix(self, n: int) -> "DiagonalScales":
        """The first ``n`` scales (used by dimension sweeps)."""
        if not 1 <= n <= self.n:
            raise ValueError(f"prefix length {n} outside 1..{self.n}")
        return DiagonalScales.from_values(self.d[:n])


@dataclass(frozen=True)
class CovariancePair:
    sigma1: np.ndarray
    sigma2: np.ndarray

    def __post_init__(self) -> None:
        for name in ("sigma1", "sigma2"):
            m = np.asarray(getattr(self, name), dtype=float)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise ValueError(f"{name} must be a square matrix, got shape {m.shape}")
            scale = max(np.max(np.abs(m)), np.finfo(float).tiny)
            if np.max(np.abs(m - m.T)) > 1e-12 * scale:
                raise ValueError(f"{name} is not symmetric")
            object.__setattr__(self, name, m)
        if self.sigma1.shape != self.sigma2.shape:
            raise ValueError("covariance matrices have different shapes")


def reduce_pair(pair: CovariancePair) -> DiagonalScales:
    """Eigenvalues of S1^{-1/2} S2 S1^{-1/2}, ascending.

    Solved as the symmetric-definite problem S2 v = d S1 v: LAPACK factors S1
    by Cholesky and diagonalizes the congruence L^{-1} S2 L^{-T}, so S1 is
    never inverted.
    """
    s1 = 0.5 * (pair.sigma1 + pair.sigma1.T)
    s2 = 0.5 * (pair.sigma2 + pair.sigma2.T)
    try:
        linalg.cholesky(s2, lower=True)
        d = linalg.eigh(s2, s1, eigvals_only=True)
    except linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(f"covariance is not positive definite: {exc}") from exc
    if np.any(d <= 0):
        raise NotPositiveDefiniteError("reduced scales must be positive")
    return DiagonalScales.from_values(np.sort(d))
