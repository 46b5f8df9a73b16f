"""Dense linear-algebra and Gaussian helpers.

Vectors are 1-d float arrays, matrices 2-d float arrays, batches of vectors
are ``(n, d)`` arrays. Everything here is a pure function of its inputs.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import EmptyInput, InsufficientSamples, NotPositiveDefinite, ShapeMismatch

LOG_2PI = float(np.log(2.0 * np.pi))

RIDGE_SCALE = 1e-6
RIDGE_FLOOR = 1e-9


@dataclass(frozen=True)
class CholeskyFactor:
    lower: np.ndarray

    @property
    def dim(self) -> int:
        return self.lower.shape[0]

    def logdet(self) -> float:
        return 2.0 * float(np.sum(np.log(np.diag(self.lower))))


def as_rows(rows) -> np.ndarray:
    x = np.asarray(rows, dtype=float)
    if x.ndim == 1:
        x = x[None, :] if x.size else x.reshape(0, 0)
    if x.ndim != 2:
        raise ShapeMismatch(f"expected a batch of vectors, got shape {x.shape}")
    return x


def mean_vector(rows) -> np.ndarray:
    x = as_rows(rows)
    if x.shape[0] == 0:
        raise EmptyInput("mean of an empty set of rows")
    return x.mean(axis=0)


def covariance_matrix(rows, mean=None) -> np.ndarray:
    """Unbiased sample covariance ``(1/(N-1)) sum (x-mu)(x-mu)^T``."""
    x = as_rows(rows)
    if x.shape[0] < 2:
        raise InsufficientSamples(f"covariance needs at least 2 rows, got {x.shape[0]}")
    mu = x.mean(axis=0) if mean is None else np.asarray(mean, dtype=float)
    if mu.shape != (x.shape[1],):
        raise ShapeMismatch(f"mean has shape {mu.shape}, rows have dim {x.shape[1]}")
    diff = x - mu
    cov = diff.T @ diff / (x.shape[0] - 1)
    return 0.5 * (cov + cov.T)


def default_ridge(cov: np.ndarray) -> float:
    """Scale-aware ridge: 1e-6 of the mean variance, floored at 1e-9."""
    cov = np.asarray(cov, dtype=float)
    d = cov.shape[0]
    if d == 0:
        return RIDGE_FLOOR
    return max(RIDGE_SCALE * float(np.trace(cov)) / d, RIDGE_FLOOR)


def ridge_regularize(m, eps: float) -> np.ndarray:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeMismatch(f"ridge needs a square matrix, got shape {m.shape}")
    if eps < 0:
        raise ValueError("eps must be non-negative")
    return m + eps * np.eye(m.shape[0])


def cholesky(m) -> CholeskyFactor:
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ShapeMismatch(f"cholesky needs a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NotPositiveDefinite("matrix has non-finite entries")
    scale = max(float(np.max(np.abs(m))), 1.0) if m.size else 1.0
    if np.max(np.abs(m - m.T), initial=0.0) > 1e-8 * scale:
        raise NotPositiveDefinite("matrix is not symmetric")
    try:
        lower = np.linalg.cholesky(0.5 * (m + m.T))
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(str(exc)) from None
    if np.any(np.diag(lower) <= 0):
        raise NotPositiveDefinite("non-positive pivot")
    return CholeskyFactor(lower)


def regularized_cholesky(cov, eps: float | None = None) -> CholeskyFactor:
    """Cholesky of ``cov + eps*I`` with the default scale-aware ridge."""
    cov = np.asarray(cov, dtype=float)
    if eps is None:
        eps = default_ridge(cov)
    return cholesky(ridge_regularize(cov, eps))


def sample_gaussian(mean, chol: CholeskyFactor, n: int, rng: np.random.Generator) -> np.ndarray:
    mean = np.asarray(mean, dtype=float)
    if mean.shape != (chol.dim,):
        raise ShapeMismatch(f"mean dim {mean.shape} does not match factor dim {chol.dim}")
    if n < 0:
        raise ValueError("n must be non-negative")
    z = rng.standard_normal((n, chol.dim))
    return mean + z @ chol.lower.T


def gaussian_log_density(x, mean, cov=None, *, chol: CholeskyFactor | None = None) -> np.ndarray | float:
    """Log of the standard multivariate normal density.

    ``x`` may be a single vector or an ``(n, d)`` batch. Pass ``chol`` to
    reuse a factorization; otherwise ``cov`` is factorized as given (no ridge).
    """
    mean = np.asarray(mean, dtype=float)
    if chol is None:
        chol = cholesky(cov)
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    xb = x[None, :] if single else x
    if xb.shape[1] != mean.shape[0] or chol.dim != mean.shape[0]:
        raise ShapeMismatch("dimension mismatch between x, mean and covariance")
    d = mean.shape[0]
    sol = solve_triangular(chol.lower, (xb - mean).T, lower=True, check_finite=False)
    maha = np.sum(sol * sol, axis=0)
    out = -0.5 * (d * LOG_2PI + chol.logdet() + maha)
    return float(out[0]) if single else out
