"""Inverse signal strengths, their mean measure and Gaussian-tail helpers.

Signals are in normalized units: ``Y = g(x) / S_x`` is the reciprocal of
the received power divided by the transmit power ``P``. A threshold of
``t`` reciprocal mW therefore corresponds to the normalized threshold
``t * P_mW``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import ParameterDomainError
from .gfield import FieldSample
from .placement import PointConfig

__all__ = [
    "PropagationParams",
    "SpectrumSample",
    "Q",
    "log_Q",
    "pathloss",
    "h_of",
    "b_of",
    "b_of_r",
    "marginal_prob",
    "marginal_prob_r",
    "mean_measure_det",
    "mean_measure_poisson_disc",
    "mean_measure_limit",
    "radial_integral_to_inf",
    "transition_radius",
    "realize_spectrum",
    "mills_ratio",
    "mills_bounds",
    "gauss_expect_identities",
    "normalized_threshold",
    "threshold_from_dbm",
]

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class PropagationParams:
    """Path loss ``(K r)^beta``, log-shadowing scale ``sigma`` and intensity ``kappa``.

    ``K`` is in km^-1 and ``kappa`` in km^-2.
    """

    K: float
    beta: float
    sigma: float
    kappa: float = 1.0

    def __post_init__(self):
        for name in ("K", "sigma", "kappa"):
            val = getattr(self, name)
            if not (val > 0 and math.isfinite(val)):
                raise ParameterDomainError(f"{name} must be positive, got {val}")
        if not self.beta > 2:
            raise ParameterDomainError(f"beta must exceed 2, got {self.beta}")


@dataclass(frozen=True)
class SpectrumSample:
    """Sorted inverse signal strengths up to the largest threshold, and counts."""

    y: np.ndarray
    counts: dict


def Q(x):
    """Standard normal upper tail ``P(Z > x)``."""
    out = 0.5 * special.erfc(np.asarray(x, dtype=float) / _SQRT2)
    return float(out) if np.ndim(out) == 0 else out


def log_Q(x):
    """``log Q(x)``, finite far into the upper tail."""
    out = special.log_ndtr(-np.asarray(x, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def h_of(params: PropagationParams, r):
    """Radial path loss ``(K r)^beta``."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ParameterDomainError("path loss is undefined at the origin")
    out = (params.K * r) ** params.beta
    return float(out) if out.ndim == 0 else out


def pathloss(params: PropagationParams, x):
    """``g(x) = (K |x|)^beta`` for one point or an (n, 2) array."""
    x = np.asarray(x, dtype=float)
    return h_of(params, np.hypot(x[..., 0], x[..., 1]))


def b_of(params: PropagationParams, g_val, t):
    """``log(g / t) / sigma + sigma / beta``; ``Q(b)`` is the marginal probability."""
    g_val = np.asarray(g_val, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0) or np.any(g_val <= 0):
        raise ParameterDomainError("g and t must be positive")
    out = np.log(g_val / t) / params.sigma + params.sigma / params.beta
    return float(out) if out.ndim == 0 else out


def b_of_r(params: PropagationParams, r, t):
    """``b`` at distance ``r``, computed in logs so huge radii do not overflow."""
    r = np.asarray(r, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(r <= 0) or np.any(t <= 0):
        raise ParameterDomainError("r and t must be positive")
    out = (params.beta * np.log(params.K * r) - np.log(t)) / params.sigma + params.sigma / params.beta
    return float(out) if out.ndim == 0 else out


def marginal_prob_r(params: PropagationParams, r, t):
    """``P(g / S <= t)`` for a transmitter at distance ``r``."""
    return Q(b_of_r(params, r, t))


def marginal_prob(params: PropagationParams, x, t):
    """``P(g(x) / S_x <= t)`` for a point ``x`` (or an (n, 2) array)."""
    x = np.asarray(x, dtype=float)
    r = np.hypot(x[..., 0], x[..., 1])
    if np.any(r == 0):
        raise ParameterDomainError("the origin carries no transmitter")
    return marginal_prob_r(params, r, t)


def mean_measure_det(params: PropagationParams, config: PointConfig, t):
    """``M(t) = sum_i Q(b_i)`` for a fixed configuration; ``t`` may be an array."""
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    if len(config) == 0:
        out = np.zeros_like(t_arr)
    else:
        out = np.array([np.sum(marginal_prob_r(params, config.norms, tt)) for tt in t_arr])
    return float(out[0]) if np.ndim(t) == 0 else out


def transition_radius(params: PropagationParams, t: float) -> float:
    """Radius where ``b = 0``, i.e. the marginal probability is 1/2."""
    return math.exp((math.log(t) - params.sigma**2 / params.beta) / params.beta) / params.K


def _radial_integral(params: PropagationParams, t: float, lo: float, hi: float, power: int) -> float:
    """``int_lo^hi Q(b(r))^power r dr`` split around the transition radius."""
    if hi <= lo:
        return 0.0
    r0 = transition_radius(params, t)
    spread = params.sigma / params.beta
    marks = [r0 * math.exp(k * spread) for k in range(-8, 13)]
    pts = [lo] + [m for m in marks if lo < m < hi] + [hi]

    def f(r):
        return r * Q(b_of_r(params, r, t)) ** power if r > 0 else 0.0

    total = 0.0
    for a, b in zip(pts[:-1], pts[1:]):
        val, _err = integrate.quad(f, a, b, epsabs=1e-14 * max(b * b, 1.0), epsrel=1e-11, limit=200)
        total += val
    return total


def radial_integral_to_inf(params: PropagationParams, t: float, lo: float, power: int = 1) -> float:
    """``int_lo^inf Q(b(r))^power r dr``.

    Beyond the transition radius the integral is taken in ``u = log r``,
    where ``b`` is linear in ``u`` and the integrand
    ``exp(2u + power log Q(b))`` is a smooth bump that quadrature handles
    even when the peak lies at astronomically large ``r``.
    """
    if lo < 0:
        raise ParameterDomainError("lower limit must be non-negative")
    sig, beta = params.sigma, params.beta
    r0 = transition_radius(params, t)
    head = 0.0
    start = lo
    if lo < r0:
        head = _radial_integral(params, t, lo, r0, power)
        start = r0
    shift = math.log(params.K) - math.log(t) / beta

    def b_u(u):
        return beta * (u + shift) / sig + sig / beta

    def u_of_b(b):
        return (b - sig / beta) * sig / beta - shift

    u0 = math.log(start)
    b_peak = 2.0 * sig / (power * beta)
    u_hi = max(u_of_b(max(b_peak, b_u(u0)) + 40.0 / math.sqrt(power)), u0 + 1.0)
    # rescale by the peak value of the log-integrand to stay in range
    u_peak = min(max(u_of_b(b_peak), u0), u_hi)
    log_scale = 2.0 * u_peak + power * log_Q(b_u(u_peak))

    def g(u):
        return math.exp(2.0 * u + power * log_Q(b_u(u)) - log_scale)

    step = sig / beta
    marks = sorted({u_peak + k * step for k in range(-6, 7)} | {u0 + step})
    marks = [m for m in marks if u0 < m < u_hi]
    val, _ = integrate.quad(g, u0, u_hi, epsabs=0.0, epsrel=1e-11, limit=400, points=marks or None)
    return head + val * math.exp(log_scale)


def mean_measure_poisson_disc(params: PropagationParams, C: float, t: float) -> float:
    """Mean count ``kappa 2 pi int_0^C Q(b(r)) r dr`` for Poisson placement on the disc."""
    if not C > 0:
        raise ParameterDomainError("C must be positive")
    if t <= 0:
        return 0.0
    return params.kappa * 2.0 * math.pi * _radial_integral(params, t, 0.0, C, 1)


def mean_measure_limit(params: PropagationParams, t):
    """``kappa pi t^(2/beta) / K^2``."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ParameterDomainError("t must be non-negative")
    out = params.kappa * math.pi * t ** (2.0 / params.beta) / params.K**2
    return float(out) if out.ndim == 0 else out


def realize_spectrum(
    params: PropagationParams, config: PointConfig, field: FieldSample, thresholds
) -> SpectrumSample:
    """Inverse signal strengths ``g(x_i) / S_i`` up to the largest threshold."""
    s = np.asarray(field.s if isinstance(field, FieldSample) else field, dtype=float)
    if s.shape != (len(config),):
        raise ParameterDomainError(f"field has {s.size} values for {len(config)} points")
    ts = np.sort(np.asarray(thresholds, dtype=float).ravel())
    if len(config) == 0:
        y = np.zeros(0)
    else:
        y = h_of(params, config.norms) / s
        y = np.sort(y[y <= ts[-1]])
    counts = {float(t): int(np.searchsorted(y, t, side="right")) for t in ts}
    return SpectrumSample(y, counts)


def mills_ratio(r):
    """``int_r^inf exp(-u^2/2) du / exp(-r^2/2)``."""
    out = math.sqrt(math.pi / 2.0) * special.erfcx(np.asarray(r, dtype=float) / _SQRT2)
    return float(out) if np.ndim(out) == 0 else out


def mills_bounds(r: float) -> tuple[float, float]:
    """Lower and upper bounds on :func:`mills_ratio` for ``r > 0``."""
    if not r > 0:
        raise ParameterDomainError("r must be positive")
    lower = max(1.0 / (r + 1.0), r / (r * r + 1.0))
    upper = min(math.sqrt(math.pi / 2.0), 1.0 / r)
    return lower, upper


def gauss_expect_identities(m: float, v: float) -> tuple[float, float, float]:
    """For ``X ~ N(m, v^2)``: ``E exp(-X^2/2)``, ``E X exp(-X^2/2)`` and a bound on ``E X 1[X > 0]``."""
    if not v > 0:
        raise ParameterDomainError("v must be positive")
    w = v * v + 1.0
    e = math.exp(-m * m / (2.0 * w))
    return w**-0.5 * e, m * w**-1.5 * e, math.sqrt(v * v + m * m)


def normalized_threshold(t_per_mw, power_mw: float):
    """Threshold in reciprocal mW mapped to normalized units."""
    return np.asarray(t_per_mw, dtype=float) * power_mw


def threshold_from_dbm(dbm, power_mw: float):
    """Normalized threshold counting signals received at ``dbm`` or stronger."""
    return power_mw / 10.0 ** (np.asarray(dbm, dtype=float) / 10.0)
