"""Isotropic correlation functions for the shadowing field.

Every model is a function of the lag ``r = |x - y|`` only. The module
covers evaluation, the radial dominator consumed by the bound
calculators, spectral densities, the uniform-positive-definiteness
constant ``delta(eps)`` and the tail integral ``int_R^inf s rho(s)^2 ds``.

Lengths are in km throughout.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from numpy.polynomial import Polynomial
from scipy import integrate
from scipy.spatial.distance import pdist, squareform

from .errors import (
    DegenerateConfigurationError,
    ParameterDomainError,
    UnsupportedModelError,
)

__all__ = [
    "Kind",
    "CorrelationModel",
    "P2Check",
    "bessel_k",
    "eval_rho",
    "radial_dominator",
    "check_p2",
    "spectral_density",
    "upd_delta",
    "upd_log_delta",
    "corr_matrix",
    "min_eigenvalue",
    "tail_integral",
]


class Kind(str, enum.Enum):
    NUGGET = "nugget"
    EXPONENTIAL = "exponential"
    MATERN = "matern"
    SQUARED_EXPONENTIAL = "squared_exponential"
    WENDLAND = "wendland"


_ALIASES = {
    "gaussian": Kind.SQUARED_EXPONENTIAL,
    "squaredexponential": Kind.SQUARED_EXPONENTIAL,
    "sqexp": Kind.SQUARED_EXPONENTIAL,
    "exp": Kind.EXPONENTIAL,
}


def _parse_kind(kind) -> Kind:
    if isinstance(kind, Kind):
        return kind
    key = str(kind).strip().lower().replace("-", "_")
    if key in _ALIASES:
        return _ALIASES[key]
    try:
        return Kind(key)
    except ValueError:
        raise ParameterDomainError(f"unknown correlation kind {kind!r}") from None


@dataclass(frozen=True)
class CorrelationModel:
    """An isotropic correlation function.

    Parameters
    ----------
    kind : Kind or str
        One of nugget, exponential, matern, squared_exponential, wendland.
    scale : float
        Decorrelation length in km (``theta`` for Matérn and squared
        exponential, the support radius for Wendland). Ignored by the nugget.
    smoothness : float
        Matérn ``nu`` or the Wendland order ``k`` (0..3). Exponential is the
        Matérn model with ``nu = 1/2`` and ignores this field.
    dimension : int
        Ambient dimension ``d`` used by spectral densities and Wendland.
    """

    kind: Kind
    scale: float = 1.0
    smoothness: float = 0.5
    dimension: int = 2

    def __post_init__(self):
        object.__setattr__(self, "kind", _parse_kind(self.kind))
        if self.dimension < 1 or int(self.dimension) != self.dimension:
            raise ParameterDomainError("dimension must be a positive integer")
        if self.kind is Kind.NUGGET:
            return
        if not (self.scale > 0 and math.isfinite(self.scale)):
            raise ParameterDomainError(f"scale must be positive, got {self.scale}")
        if self.kind is Kind.MATERN and not self.smoothness > 0:
            raise ParameterDomainError("Matern smoothness nu must be positive")
        if self.kind is Kind.WENDLAND:
            k = self.smoothness
            if k not in (0, 1, 2, 3):
                raise ParameterDomainError("Wendland order k must be one of 0, 1, 2, 3")
        if self.kind is Kind.EXPONENTIAL:
            object.__setattr__(self, "smoothness", 0.5)

    @property
    def nu(self) -> float:
        """Matérn smoothness (exponential maps to 1/2)."""
        if self.kind in (Kind.EXPONENTIAL, Kind.MATERN):
            return float(self.smoothness)
        raise UnsupportedModelError(f"{self.kind.value} has no Matern smoothness")

    @classmethod
    def exponential(cls, scale, dimension=2):
        return cls(Kind.EXPONENTIAL, scale, 0.5, dimension)

    @classmethod
    def matern(cls, scale, nu, dimension=2):
        return cls(Kind.MATERN, scale, nu, dimension)

    @classmethod
    def squared_exponential(cls, scale, dimension=2):
        return cls(Kind.SQUARED_EXPONENTIAL, scale, 0.0, dimension)

    @classmethod
    def wendland(cls, scale, k=1, dimension=2):
        return cls(Kind.WENDLAND, scale, k, dimension)

    @classmethod
    def nugget(cls, dimension=2):
        return cls(Kind.NUGGET, 1.0, 0.0, dimension)


# ---------------------------------------------------------------------------
# Modified Bessel function of the second kind
# ---------------------------------------------------------------------------

def _log_bessel_k_scaled(nu: float, x: np.ndarray, rtol: float = 1e-13) -> np.ndarray:
    """``log(exp(x) K_nu(x))`` for ``x > 0`` from the integral representation.

    Uses ``K_nu(x) = int_0^inf exp(-x cosh t) cosh(nu t) dt``. The integrand
    is even and analytic, so the trapezoid rule on a truncated half line
    converges geometrically; the step is halved until successive
    estimates agree to ``rtol``.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    nu = abs(float(nu))

    def log_integrand(t):
        # -x (cosh t - 1) + log cosh(nu t), both pieces overflow-safe
        tt = t[None, :]
        xx = x[:, None]
        lc = nu * tt + np.log1p(np.exp(-2.0 * nu * tt)) - math.log(2.0)
        return -xx * (2.0 * np.sinh(tt / 2.0) ** 2) + lc

    # truncation: beyond t_hi the integrand is < exp(-45) of its maximum
    x_min = float(x.min())
    t_hi = 1.0
    while True:
        grid = np.linspace(0.0, t_hi, 64)
        lg = log_integrand(grid)
        peak = lg.max(axis=1)
        if np.all(lg[:, -1] < peak - 45.0) and np.all(np.diff(lg[:, -4:], axis=1) < 0):
            break
        t_hi *= 1.5
        if t_hi > 200.0 + 10.0 * nu + 2.0 * abs(math.log(x_min)):
            break

    x_max = float(x.max())
    h = min(0.25, 0.5 / math.sqrt(1.0 + x_max))
    prev = None
    for _ in range(12):
        n = int(math.ceil(t_hi / h)) + 1
        t = np.linspace(0.0, t_hi, n)
        step = t[1] - t[0]
        lg = log_integrand(t)
        m = lg.max(axis=1, keepdims=True)
        w = np.exp(lg - m)
        s = step * (w.sum(axis=1) - 0.5 * w[:, 0] - 0.5 * w[:, -1])
        est = np.log(s) + m[:, 0]
        if prev is not None and np.all(np.abs(est - prev) < rtol):
            return est
        prev = est
        h /= 2.0
    return prev


def bessel_k(nu: float, x) -> np.ndarray:
    """Modified Bessel function of the second kind ``K_nu(x)`` for ``x > 0``."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ParameterDomainError("bessel_k requires x > 0")
    out = np.exp(_log_bessel_k_scaled(nu, x.ravel()) - x.ravel())
    return out.reshape(x.shape)


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def _wendland_poly(d: int, k: int) -> Polynomial:
    """phi_{d,k}(r) on [0, 1], normalized so the value at 0 is 1."""
    l = d // 2 + k + 1
    one_minus = Polynomial([1.0, -1.0])
    if k == 0:
        p = one_minus ** l
    elif k == 1:
        p = one_minus ** (l + 1) * Polynomial([1.0, l + 1.0])
    elif k == 2:
        p = one_minus ** (l + 2) * Polynomial([3.0, 3 * l + 6.0, l * l + 4 * l + 3.0])
    else:
        p = one_minus ** (l + 3) * Polynomial(
            [15.0, 15 * l + 45.0, 6 * l * l + 36 * l + 45.0, l**3 + 9 * l * l + 23 * l + 15.0]
        )
    return p / p(0.0)


def _matern_closed(nu: float, u: np.ndarray):
    if nu == 0.5:
        return np.exp(-u)
    if nu == 1.5:
        return (1.0 + u) * np.exp(-u)
    if nu == 2.5:
        return (1.0 + u + u * u / 3.0) * np.exp(-u)
    return None


def _matern(nu: float, u: np.ndarray) -> np.ndarray:
    closed = _matern_closed(nu, u)
    if closed is not None:
        return closed
    out = np.ones_like(u)
    pos = u > 0
    # exp(-745) underflows; the correlation is zero to double precision there
    far = u > 745.0 + nu * math.log(745.0)
    mid = pos & ~far
    out[far] = 0.0
    if np.any(mid):
        um = u[mid]
        log_rho = (
            (1.0 - nu) * math.log(2.0)
            - math.lgamma(nu)
            + nu * np.log(um)
            - um
            + _log_bessel_k_scaled(nu, um)
        )
        out[mid] = np.minimum(np.exp(log_rho), 1.0)
    return out


def eval_rho(model: CorrelationModel, r):
    """Correlation at lag ``r`` (scalar or array, km)."""
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0) or np.any(np.isnan(r_arr)):
        raise ParameterDomainError("lag r must be non-negative")
    flat = np.atleast_1d(r_arr).ravel()
    kind = model.kind
    if kind is Kind.NUGGET:
        out = (flat == 0).astype(float)
    elif kind in (Kind.EXPONENTIAL, Kind.MATERN):
        out = _matern(model.nu, flat / model.scale)
    elif kind is Kind.SQUARED_EXPONENTIAL:
        out = np.exp(-0.5 * (flat / model.scale) ** 2)
    else:
        u = flat / model.scale
        poly = _wendland_poly(model.dimension, int(model.smoothness))
        out = np.where(u < 1.0, poly(np.minimum(u, 1.0)), 0.0)
        out = np.clip(out, 0.0, 1.0)
    out = out.reshape(r_arr.shape)
    return float(out) if out.ndim == 0 else out


def radial_dominator(model: CorrelationModel, r):
    """Non-increasing bound ``rho_tilde(r) >= rho(x, y)`` for ``|x - y| = r``.

    All models here are isotropic, non-negative and non-increasing, so the
    dominator is the correlation itself; bound code calls this rather
    than :func:`eval_rho` so that the two can diverge later.
    """
    return eval_rho(model, r)


class P2Check(NamedTuple):
    ok: bool
    violation: float | None


def check_p2(
    model: CorrelationModel,
    R: float,
    n_grid: int = 10_000,
    r_max: float = 1e3,
    tol: float = 1e-12,
) -> P2Check:
    """Check that ``r -> r * rho_tilde(R + sqrt(3) R (r - 1))**2`` is non-increasing.

    The map is evaluated on a geometric grid over ``[1, r_max]``; an
    increase larger than ``tol`` (relative to the previous value, with an
    absolute floor of ``tol``) is reported as the first violation.
    """
    if not R > 0:
        raise ParameterDomainError("R must be positive")
    r = np.geomspace(1.0, r_max, n_grid)
    vals = r * np.asarray(radial_dominator(model, R + math.sqrt(3.0) * R * (r - 1.0))) ** 2
    inc = np.diff(vals) - tol * np.maximum(np.abs(vals[:-1]), 1.0)
    bad = np.flatnonzero(inc > 0)
    if bad.size:
        return P2Check(False, float(r[bad[0] + 1]))
    return P2Check(True, None)


# ---------------------------------------------------------------------------
# Spectral densities and uniform positive definiteness
# ---------------------------------------------------------------------------

def _log_spectral_density(model: CorrelationModel, w) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    d = model.dimension
    if model.kind in (Kind.EXPONENTIAL, Kind.MATERN):
        nu, th = model.nu, model.scale
        return (
            math.lgamma(nu + d / 2)
            + d * math.log(th)
            - math.lgamma(nu)
            - (d / 2) * math.log(math.pi)
            - (nu + d / 2) * np.log1p((th * w) ** 2)
        )
    if model.kind is Kind.SQUARED_EXPONENTIAL:
        th = model.scale
        return d * math.log(th / math.sqrt(2 * math.pi)) - 0.5 * (th * w) ** 2
    raise UnsupportedModelError(f"no closed-form spectral density for {model.kind.value}")


def spectral_density(model: CorrelationModel, w):
    """Spectral density ``f(w)`` at frequency magnitude ``w``.

    Normalized so that ``rho(z) = int cos(x.z) f(x) dx`` over R^d.
    """
    w = np.asarray(w, dtype=float)
    if np.any(w < 0):
        raise ParameterDomainError("frequency magnitude must be non-negative")
    out = np.exp(_log_spectral_density(model, w))
    return float(out) if out.ndim == 0 else out


def _upd_H(eps: float, d: int) -> float:
    g = math.gamma(d / 2 + 1)
    return (24.0 / eps) * (math.pi * g * g / 9.0) ** (1.0 / (d + 1))


def upd_log_delta(model: CorrelationModel, eps: float) -> float:
    """Natural log of :func:`upd_delta`; finite even where ``delta`` underflows."""
    if not eps > 0:
        raise ParameterDomainError("eps must be positive")
    if model.kind is Kind.NUGGET:
        return 0.0
    if model.kind is Kind.WENDLAND:
        raise UnsupportedModelError("no explicit u.p.d. constant implemented for Wendland")
    d = model.dimension
    H = _upd_H(eps, d)
    # the supported densities are radially non-increasing: inf over the
    # closed 2H-ball is attained on its boundary
    log_f0 = float(_log_spectral_density(model, 2.0 * H))
    return (
        (d / 2) * math.log(math.pi)
        - (d + 1) * math.log(2.0)
        - math.lgamma(d / 2 + 1)
        + d * math.log(H)
        + log_f0
    )


def upd_delta(model: CorrelationModel, eps: float) -> float:
    """Lower bound on the smallest eigenvalue of any ``eps``-separated correlation matrix.

    ``H`` is fixed at the smallest admissible value
    ``(24/eps) (pi Gamma(d/2+1)^2 / 9)^(1/(d+1))`` and
    ``delta = pi^(d/2) / (2^(d+1) Gamma(d/2+1)) H^d f(2H)``.
    The nugget model is trivially u.p.d. with ``delta = 1``.
    """
    return math.exp(upd_log_delta(model, eps))


# ---------------------------------------------------------------------------
# Matrices
# ---------------------------------------------------------------------------

def corr_matrix(model: CorrelationModel, points) -> np.ndarray:
    """Correlation matrix ``(rho(|x_i - x_j|))_ij`` of a planar point set."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    n = len(pts)
    if n == 0:
        return np.zeros((0, 0))
    dist = pdist(pts)
    if np.any(dist == 0):
        raise DegenerateConfigurationError("configuration contains coincident points")
    mat = np.asarray(eval_rho(model, squareform(dist)))
    np.fill_diagonal(mat, 1.0)
    return mat


def min_eigenvalue(matrix) -> float:
    """Smallest eigenvalue of a symmetric matrix."""
    m = np.asarray(matrix, dtype=float)
    if m.size == 0:
        raise DegenerateConfigurationError("empty matrix")
    return float(np.linalg.eigvalsh(m)[0])


# ---------------------------------------------------------------------------
# Tail integral
# ---------------------------------------------------------------------------

def tail_integral(model: CorrelationModel, R: float, tol: float = 1e-12) -> float:
    """``int_R^inf s * rho_tilde(s)**2 ds``."""
    if not R > 0:
        raise ParameterDomainError("R must be positive")
    kind = model.kind
    if kind is Kind.NUGGET:
        return 0.0
    if kind is Kind.EXPONENTIAL:
        th = model.scale
        return math.exp(-2.0 * R / th) * (th * R / 2.0 + th * th / 4.0)
    if kind is Kind.WENDLAND:
        a = model.scale
        if R >= a:
            return 0.0
        p = _wendland_poly(model.dimension, int(model.smoothness))
        anti = (Polynomial([0.0, 1.0]) * p * p).integ()
        return a * a * float(anti(1.0) - anti(R / a))

    def f(s):
        return s * float(radial_dominator(model, s)) ** 2

    # integrate over consecutive windows of a few correlation lengths until
    # the window contribution, which dominates the remainder, is below tol
    width = 4.0 * model.scale
    total, lo = 0.0, R
    for _ in range(10_000):
        part, _err = integrate.quad(f, lo, lo + width, epsabs=tol / 10, epsrel=1e-12, limit=200)
        total += part
        lo += width
        if part < tol / 10 and f(lo) * model.scale < tol / 10:
            break
    return total
