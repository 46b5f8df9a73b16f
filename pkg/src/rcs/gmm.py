"""Full-covariance Gaussian mixtures fitted by EM.

The M-step adds a fixed ridge ``eps*I`` to every component covariance,
``eps`` chosen once per fit from the data scale. That update is the exact
maximizer of the log-likelihood with each point's density smoothed by
``N(0, eps*I)`` noise, i.e. ``log N(x; mu, S) - eps/2 tr(S^-1)``, so the
recorded objective is monotone under EM. With ``ridge=0`` it is the plain
log-likelihood.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.linalg import solve_triangular
from scipy.special import logsumexp

from .errors import InsufficientSamples, InvalidArgument, NotPositiveDefinite, ShapeMismatch
from .linalg import (LOG_2PI, CholeskyFactor, as_rows, cholesky, default_ridge, regularized_cholesky,
                     sample_gaussian)

log = logging.getLogger(__name__)

DEAD_MASS = 1e-12


@dataclass(frozen=True)
class EmConfig:
    max_iters: int = 200
    tol: float = 1e-6
    ridge: float | Literal["scale"] = "scale"
    init: Literal["kmeans++", "random-points"] = "kmeans++"
    restarts: int = 3

    def __post_init__(self):
        if self.max_iters < 1:
            raise InvalidArgument("max_iters must be >= 1")
        if not self.tol > 0:
            raise InvalidArgument("tol must be > 0")
        if self.restarts < 1:
            raise InvalidArgument("restarts must be >= 1")
        if self.init not in ("kmeans++", "random-points"):
            raise InvalidArgument(f"unknown init {self.init!r}")
        if self.ridge != "scale" and float(self.ridge) < 0:
            raise InvalidArgument("ridge must be 'scale' or a non-negative number")


@dataclass(frozen=True)
class GmmComponent:
    weight: float
    mean: np.ndarray
    cov: np.ndarray
    hard_count: int

    @property
    def size(self) -> int:
        """Hard-assignment size floored at 1, used for calibration weights."""
        return max(1, self.hard_count)


@dataclass(frozen=True)
class GmmModel:
    components: tuple[GmmComponent, ...]
    loglik_trace: tuple[float, ...] = ()
    ridge: float = 0.0
    warnings: tuple[str, ...] = ()

    @property
    def n_components(self) -> int:
        return len(self.components)

    @property
    def weights(self) -> np.ndarray:
        return np.array([c.weight for c in self.components])

    @property
    def means(self) -> np.ndarray:
        return np.array([c.mean for c in self.components])

    @property
    def covs(self) -> np.ndarray:
        return np.array([c.cov for c in self.components])

    @property
    def sizes(self) -> np.ndarray:
        return np.array([c.size for c in self.components])

    def to_json(self) -> dict:
        return {
            "n_components": self.n_components,
            "ridge": self.ridge,
            "weights": [c.weight for c in self.components],
            "means": [c.mean.tolist() for c in self.components],
            "covariances": [c.cov.tolist() for c in self.components],
            "sizes": [c.size for c in self.components],
            "hard_counts": [c.hard_count for c in self.components],
            "loglik_trace": list(self.loglik_trace),
            "warnings": list(self.warnings),
        }

    @classmethod
    def from_json(cls, doc: dict) -> GmmModel:
        comps = tuple(
            GmmComponent(float(w), np.asarray(m, dtype=float), np.asarray(c, dtype=float), int(h))
            for w, m, c, h in zip(doc["weights"], doc["means"], doc["covariances"], doc["hard_counts"])
        )
        return cls(comps, tuple(doc.get("loglik_trace", ())), float(doc.get("ridge", 0.0)),
                   tuple(doc.get("warnings", ())))

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


def component_count(n_c: int, n_k: int) -> int:
    """Number of mixture components for a class: ``max(1, floor(N_c / N_K))``."""
    if n_k <= 0:
        raise InvalidArgument("smallest class count must be positive")
    if n_c < n_k:
        raise InvalidArgument(f"class count {n_c} below the smallest class count {n_k}")
    return max(1, n_c // n_k)


# ---------------------------------------------------------------- EM internals


def _factor(cov: np.ndarray, eps: float, warnings: list) -> CholeskyFactor:
    try:
        return cholesky(cov)
    except NotPositiveDefinite:
        warnings.append("component covariance not positive definite; fell back to its diagonal")
        diag = np.diag(np.clip(np.diag(cov), 0.0, None)) + max(eps, 1e-9) * np.eye(cov.shape[0])
        return cholesky(diag)


def _log_joint(x, log_w, means, chols, eps):
    """Per-point, per-component ``log alpha_i + log N(x; mu_i, S_i) - eps/2 tr(S_i^-1)``."""
    n, d = x.shape
    out = np.empty((n, len(means)))
    for i, (mu, ch) in enumerate(zip(means, chols)):
        sol = solve_triangular(ch.lower, (x - mu).T, lower=True, check_finite=False)
        out[:, i] = -0.5 * (d * LOG_2PI + ch.logdet() + np.sum(sol * sol, axis=0))
        if eps > 0:
            linv = solve_triangular(ch.lower, np.eye(d), lower=True, check_finite=False)
            out[:, i] -= 0.5 * eps * np.sum(linv * linv)
    return out + log_w[None, :]


def _m_step(x, resp, eps, prev_means, prev_covs):
    n, d = x.shape
    nk = resp.sum(axis=0)
    weights = nk / n
    means = prev_means.copy()
    covs = prev_covs.copy()
    for i in range(resp.shape[1]):
        if nk[i] <= DEAD_MASS * n:
            continue
        mu = resp[:, i] @ x / nk[i]
        diff = x - mu
        cov = (resp[:, i, None] * diff).T @ diff / nk[i]
        means[i] = mu
        covs[i] = 0.5 * (cov + cov.T) + eps * np.eye(d)
    return weights, means, covs


def _kmeanspp(x, xi, rng):
    n = x.shape[0]
    centers = [int(rng.integers(n))]
    d2 = np.sum((x - x[centers[0]]) ** 2, axis=1)
    for _ in range(1, xi):
        total = d2.sum()
        if total <= 0:
            remaining = np.setdiff1d(np.arange(n), centers)
            nxt = int(rng.choice(remaining))
        else:
            nxt = int(rng.choice(n, p=d2 / total))
        centers.append(nxt)
        d2 = np.minimum(d2, np.sum((x - x[nxt]) ** 2, axis=1))
    return x[centers]


def _initial_params(x, xi, cfg, eps, rng):
    n, d = x.shape
    if cfg.init == "kmeans++":
        centers = _kmeanspp(x, xi, rng)
        dist = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        hard = np.argmin(dist, axis=1)
        resp = np.zeros((n, xi))
        resp[np.arange(n), hard] = 1.0
        glob = np.cov(x.T, bias=True).reshape(d, d) + eps * np.eye(d)
        return _m_step(x, resp, eps, centers.copy(), np.repeat(glob[None], xi, axis=0))
    idx = rng.choice(n, size=xi, replace=False)
    glob = np.cov(x.T, bias=True).reshape(d, d) + max(eps, 1e-9) * np.eye(d)
    return np.full(xi, 1.0 / xi), x[idx].copy(), np.repeat(glob[None], xi, axis=0)


def _run_em(x, xi, cfg, eps, rng):
    warnings: list[str] = []
    weights, means, covs = _initial_params(x, xi, cfg, eps, rng)
    trace: list[float] = []
    resp = None
    for it in range(cfg.max_iters):
        chols = [_factor(c, eps, warnings) for c in covs]
        with np.errstate(divide="ignore"):
            log_w = np.log(weights)
        lj = _log_joint(x, log_w, means, chols, eps)
        row_norm = logsumexp(lj, axis=1)
        obj = float(row_norm.sum())
        resp = np.exp(lj - row_norm[:, None])
        converged = bool(trace) and abs(obj - trace[-1]) <= cfg.tol * max(abs(obj), 1.0)
        trace.append(obj)
        if converged or it == cfg.max_iters - 1:
            break
        weights, means, covs = _m_step(x, resp, eps, means, covs)
    return weights, means, covs, resp, trace, warnings


def fit_gmm(data, xi: int, cfg: EmConfig | None = None, rng: np.random.Generator | None = None) -> GmmModel:
    """Fit a ``xi``-component full-covariance mixture, best of ``cfg.restarts`` runs."""
    cfg = cfg or EmConfig()
    rng = rng if rng is not None else np.random.default_rng(0)
    x = as_rows(data)
    if xi < 1:
        raise InvalidArgument("xi must be >= 1")
    if x.shape[0] < xi:
        raise InsufficientSamples(f"{x.shape[0]} points cannot support {xi} components")
    d = x.shape[1]
    if cfg.ridge == "scale":
        eps = default_ridge(np.cov(x.T, bias=True).reshape(d, d)) if x.shape[0] > 1 else 1e-9
    else:
        eps = float(cfg.ridge)

    best = None
    for _ in range(cfg.restarts if xi > 1 else 1):
        run = _run_em(x, xi, cfg, eps, rng)
        if best is None or run[4][-1] > best[4][-1]:
            best = run
    weights, means, covs, resp, trace, warnings = best
    hard = np.bincount(np.argmax(resp, axis=1), minlength=xi)
    comps = tuple(GmmComponent(float(w), m, c, int(h)) for w, m, c, h in zip(weights, means, covs, hard))
    if warnings:
        log.warning("GMM fit: %s", warnings[0])
    return GmmModel(comps, tuple(trace), eps, tuple(dict.fromkeys(warnings)))


def gmm_loglik(m: GmmModel, data) -> float:
    """``sum_j log sum_i alpha_i N(x_j; mu_i, S_i)`` via log-sum-exp (no smoothing term)."""
    x = np.asarray(data, dtype=float)
    if x.size == 0:
        return 0.0
    x = as_rows(x)
    if x.shape[1] != m.means.shape[1]:
        raise ShapeMismatch(f"data dim {x.shape[1]} vs model dim {m.means.shape[1]}")
    chols = [cholesky(c.cov) for c in m.components]
    with np.errstate(divide="ignore"):
        log_w = np.log(m.weights)
    return float(logsumexp(_log_joint(x, log_w, m.means, chols, 0.0), axis=1).sum())


def sample_component(m: GmmModel, j: int, n: int, rng: np.random.Generator) -> np.ndarray:
    if not 0 <= j < m.n_components:
        raise InvalidArgument(f"component {j} out of range for {m.n_components} components")
    comp = m.components[j]
    return sample_gaussian(comp.mean, regularized_cholesky(comp.cov), n, rng)
