"""Sampling the unit-variance Gaussian shadowing field at transmitter locations."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg

from .corrfuncs import CorrelationModel, Kind, corr_matrix, eval_rho
from .errors import (
    DegenerateConfigurationError,
    IllConditionedCovarianceError,
    ParameterDomainError,
    UnsupportedModelError,
)

__all__ = [
    "RIDGES",
    "DENSE_LIMIT",
    "FieldSample",
    "FieldFactor",
    "SpectralSampler",
    "factorize",
    "sample_field",
    "shadow",
    "field_sample",
    "sigma_from_db",
    "conditional_stats",
]

#: diagonal ridges tried in turn when a factorization fails
RIDGES = (0.0, 1e-10, 1e-8)

#: largest configuration the dense sampler accepts
DENSE_LIMIT = 8000


@dataclass(frozen=True)
class FieldSample:
    """Field values ``z`` and shadow variables ``s = exp(sigma z - sigma^2 / beta)``."""

    z: np.ndarray
    s: np.ndarray
    sigma: float
    beta: float
    meta: dict = field(default_factory=dict, compare=False)


def sigma_from_db(sigma_db: float) -> float:
    """Convert a dB shadowing deviation to the natural-log scale."""
    return sigma_db * math.log(10.0) / 10.0


def shadow(z, sigma: float, beta: float) -> np.ndarray:
    """``exp(sigma z - sigma^2 / beta)``, so that ``E S^(2/beta) = 1``."""
    if not sigma > 0:
        raise ParameterDomainError("sigma must be positive")
    if not beta > 2:
        raise ParameterDomainError("beta must exceed 2")
    return np.exp(sigma * np.asarray(z, dtype=float) - sigma * sigma / beta)


def field_sample(z, sigma: float, beta: float, **meta) -> FieldSample:
    z = np.asarray(z, dtype=float)
    return FieldSample(z, shadow(z, sigma, beta), sigma, beta, dict(meta))


def _cholesky_with_ridge(matrix: np.ndarray) -> tuple[np.ndarray, float]:
    n = len(matrix)
    for ridge in RIDGES:
        a = matrix if ridge == 0 else matrix + ridge * np.eye(n)
        try:
            return np.linalg.cholesky(a), ridge
        except np.linalg.LinAlgError:
            continue
    lam = float(np.linalg.eigvalsh(matrix)[0])
    raise IllConditionedCovarianceError(
        f"correlation matrix not positive definite even with ridge {RIDGES[-1]:g} "
        f"(min eigenvalue {lam:.3e})",
        min_eigenvalue=lam,
    )


@dataclass(frozen=True)
class FieldFactor:
    """Immutable lower-triangular factor of a configuration's correlation matrix.

    ``chol`` is ``None`` for the nugget model, whose field is white noise.
    Safe to share across threads and to pickle into worker processes.
    """

    n: int
    chol: np.ndarray | None
    ridge: float

    def draw(self, rng: np.random.Generator) -> np.ndarray:
        e = rng.standard_normal(self.n)
        if self.chol is None:
            return e
        return self.chol @ e


def factorize(model: CorrelationModel, points) -> FieldFactor:
    """Factor ``corr_matrix(model, points)`` using the ridge policy in :data:`RIDGES`."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    n = len(pts)
    if model.kind is Kind.NUGGET or n <= 1:
        if n > 1 and len(np.unique(pts, axis=0)) < n:
            raise DegenerateConfigurationError("configuration contains coincident points")
        return FieldFactor(n, None, 0.0)
    if n > DENSE_LIMIT:
        raise ParameterDomainError(
            f"{n} points exceed the dense sampler limit {DENSE_LIMIT}; "
            "shrink the disc or select the spectral sampler"
        )
    chol, ridge = _cholesky_with_ridge(corr_matrix(model, pts))
    return FieldFactor(n, chol, ridge)


class SpectralSampler:
    """Approximate field sampler from random cosine features.

    Each draw uses ``n_features`` fresh frequencies ``w_k`` from the
    normalized spectral density and phases ``u_k`` uniform on
    ``[0, 2 pi)``, and returns ``sqrt(2 / n_features) sum_k cos(w_k . x + u_k)``.
    Because the frequencies are redrawn per draw, the covariance is exactly
    ``rho``; the marginals are Gaussian only in the limit of many features.
    """

    def __init__(self, model: CorrelationModel, n_features: int = 2000):
        if model.kind not in (Kind.EXPONENTIAL, Kind.MATERN, Kind.SQUARED_EXPONENTIAL, Kind.NUGGET):
            raise UnsupportedModelError(f"no spectral sampler for {model.kind.value}")
        if model.dimension != 2:
            raise UnsupportedModelError("spectral sampler is planar only")
        if n_features < 1:
            raise ParameterDomainError("n_features must be positive")
        self.model = model
        self.n_features = int(n_features)

    def _frequencies(self, rng: np.random.Generator) -> np.ndarray:
        m, F = self.model, self.n_features
        g = rng.standard_normal((F, 2))
        if m.kind is Kind.SQUARED_EXPONENTIAL:
            return g / m.scale
        # Matérn spectral density is a bivariate Student t with 2 nu degrees of freedom
        chi2 = rng.chisquare(2.0 * m.nu, F)
        return g / (m.scale * np.sqrt(chi2))[:, None]

    def draw(self, points, rng: np.random.Generator) -> np.ndarray:
        pts = np.asarray(points, dtype=float).reshape(-1, 2)
        if self.model.kind is Kind.NUGGET:
            return rng.standard_normal(len(pts))
        w = self._frequencies(rng)
        phase = rng.uniform(0.0, 2.0 * math.pi, self.n_features)
        return math.sqrt(2.0 / self.n_features) * np.cos(pts @ w.T + phase).sum(axis=1)


def sample_field(
    model: CorrelationModel,
    points,
    rng: np.random.Generator,
    factor: FieldFactor | None = None,
) -> np.ndarray:
    """One draw of the field at ``points``.

    Pass a precomputed ``factor`` to reuse a factorization across draws.
    """
    if factor is None:
        factor = factorize(model, points)
    return factor.draw(rng)


def conditional_stats(
    model: CorrelationModel, points, i: int, cond_set, z_cond
) -> tuple[float, float]:
    """Conditional mean and variance of ``Z`` at point ``i`` given the field on ``cond_set``.

    Returns ``(gamma' Gamma^-1 z, 1 - gamma' Gamma^-1 gamma)`` computed from the
    Cholesky factor of ``Gamma``.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    idx = np.asarray(list(cond_set), dtype=int)
    if idx.size == 0:
        return 0.0, 1.0
    if i in set(idx.tolist()):
        raise ParameterDomainError("conditioning set must exclude i")
    zc = np.asarray(z_cond, dtype=float).reshape(-1)
    if zc.size != idx.size:
        raise ParameterDomainError("z_cond length must match cond_set")
    sub = pts[idx]
    gamma = np.asarray(eval_rho(model, np.hypot(*(sub - pts[i]).T)), dtype=float).reshape(-1)
    chol, _ = _cholesky_with_ridge(corr_matrix(model, sub))
    w = linalg.solve_triangular(chol, gamma, lower=True)
    v = linalg.solve_triangular(chol, zc, lower=True)
    mu = float(w @ v)
    tau_sq = 1.0 - float(w @ w)
    if not tau_sq > 0:
        raise IllConditionedCovarianceError(
            "conditional variance is not positive; point is (numerically) determined by the conditioning set"
        )
    return mu, min(tau_sq, 1.0)
