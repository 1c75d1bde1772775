"""Explicit Poisson-approximation error bounds for the signal spectrum.

Every bound is returned as a :class:`BoundReport` listing its terms one
by one together with the preconditions under which it holds. A report
whose preconditions fail is marked invalid and carries no total.

Quantities that can leave floating-point range along the convergence
schedules (the disc radius ``C`` grows like ``exp(sigma^2)``, ``delta``
can underflow) are handled in logarithms.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, stats

from .corrfuncs import (
    CorrelationModel,
    Kind,
    check_p2,
    radial_dominator,
    tail_integral,
    upd_log_delta,
)
from .errors import (
    InsufficientReplicationsError,
    ParameterDomainError,
)
from .gfield import _cholesky_with_ridge
from .placement import GeometryStats, PointConfig, gen_hardcore_matern2, geometry_stats, matern2_intensity
from .spectrum import (
    PropagationParams,
    Q,
    b_of_r,
    mean_measure_det,
    mean_measure_limit,
    radial_integral_to_inf,
    _radial_integral,
)

__all__ = [
    "BoundCase",
    "MeanDevMode",
    "BoundInputs",
    "BoundReport",
    "Schedule",
    "f_factor",
    "log_f_factor",
    "d2_bound_det",
    "dtv_bound_det",
    "d2_bound_poisson",
    "d2_bound_hardcore",
    "hardcore_mean_deviation_mc",
    "var_mean_measure_poisson",
    "gamma_quadform_bound",
    "gamma_quadform_exact",
    "dtv_normal_bound",
    "dtv_normal_exact",
    "poisson_chernoff",
    "d2_poisson_poisson",
    "convergence_schedule",
    "eps0_of",
]

_LOG_MAX = 700.0


class BoundCase(str, enum.Enum):
    DETERMINISTIC = "det"
    POISSON = "poisson"
    HARDCORE = "hardcore"


class MeanDevMode(str, enum.Enum):
    MONTE_CARLO = "montecarlo"
    USER_GAMMA = "usergamma"


@dataclass(frozen=True)
class BoundInputs:
    """Everything a bound calculator needs.

    Parameters
    ----------
    params : PropagationParams
        ``kappa`` is the transmitter intensity (for hard-core placement the
        thinned intensity).
    model : CorrelationModel
    t : float
        Threshold in normalized units.
    R, C : float
        Dependence radius and truncation radius, ``C >= R > 0``.
    case : BoundCase
    config : PointConfig, optional
        Deterministic case: the transmitter configuration.
    stats : GeometryStats, optional
        Deterministic case: overrides the statistics computed from ``config``.
    isolated : bool
        Deterministic case: assert that no transmitters exist outside
        ``config``. Otherwise the plane beyond the configuration's disc is
        filled with a Poisson surrogate of intensity ``kappa`` for the
        truncation term.
    d, eps0, eps_C, T_star : float, optional
        Poisson case constants (``d`` also for hard-core).
    eps_star : float, optional
        Hard-core distance.
    """

    params: PropagationParams
    model: CorrelationModel
    t: float
    R: float
    C: float
    case: BoundCase = BoundCase.DETERMINISTIC
    config: PointConfig | None = None
    stats: GeometryStats | None = None
    isolated: bool = False
    d: float | None = None
    eps0: float | None = None
    eps_C: float | None = None
    T_star: float | None = None
    eps_star: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "case", BoundCase(self.case))
        if not (self.R > 0 and self.C >= self.R):
            raise ParameterDomainError(f"need C >= R > 0, got R={self.R}, C={self.C}")
        if not self.t > 0:
            raise ParameterDomainError("t must be positive")


@dataclass
class BoundReport:
    """Itemized bound. ``total`` is ``None`` when a precondition fails."""

    name: str
    terms: dict
    preconditions: dict
    f_value: float
    details: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return all(self.preconditions.values())

    @property
    def total(self) -> float | None:
        if not self.valid:
            return None
        return float(math.fsum(self.terms.values()))

    @property
    def informative(self) -> bool:
        tot = self.total
        return tot is not None and tot < 1.0

    def failed(self) -> list:
        return [k for k, ok in self.preconditions.items() if not ok]

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "valid": self.valid,
            "total": self.total,
            "informative": self.informative,
            "f_value": self.f_value,
            "terms": dict(self.terms),
            "preconditions": dict(self.preconditions),
            "details": dict(self.details),
            "notes": list(self.notes),
        }

    def to_text(self) -> str:
        lines = [f"bound {self.name}"]
        lines += [f"term.{k} {v!r}" for k, v in self.terms.items()]
        lines.append(f"f_value {self.f_value!r}")
        lines += [f"precondition.{k} {str(v).lower()}" for k, v in self.preconditions.items()]
        lines += [f"detail.{k} {v!r}" for k, v in self.details.items()]
        lines.append(f"valid {str(self.valid).lower()}")
        lines.append(f"total {self.total!r}" if self.valid else "total invalid")
        lines.append(f"informative {str(self.informative).lower()}")
        lines += [f"note {n}" for n in self.notes]
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, default=_json_default)


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


# ---------------------------------------------------------------------------
# Small numeric helpers
# ---------------------------------------------------------------------------

def _exp(x: float) -> float:
    return math.exp(min(x, _LOG_MAX))


def _rho(model: CorrelationModel, r: float) -> float:
    if math.isinf(r):
        return 0.0
    return float(radial_dominator(model, r))


def _bracket(model: CorrelationModel, R: float) -> float:
    """``rho_tilde(R)^2 + tail_integral(R) / (sqrt(3) R^2)``."""
    return _rho(model, R) ** 2 + tail_integral(model, R) / (math.sqrt(3.0) * R * R)


def _log_delta(model: CorrelationModel, eps: float) -> float:
    if math.isinf(eps):
        # at most one point: the correlation matrix is [1]
        return 0.0
    return upd_log_delta(model, eps)


def log_f_factor(log_delta: float, T: float, model: CorrelationModel, R: float) -> float:
    """``log F``; ``-inf`` when the correlation has died out by ``R``."""
    br = _bracket(model, R)
    if br == 0.0:
        return -math.inf
    return math.log((4.0 * math.pi + 1.0) * T * br) - log_delta


def f_factor(delta: float, T: float, model: CorrelationModel, R: float) -> float:
    """``F = (4 pi + 1) T (rho_tilde(R)^2 + int_R^inf s rho_tilde(s)^2 ds / (sqrt(3) R^2)) / delta``."""
    if not delta > 0:
        raise ParameterDomainError("delta must be positive")
    if not T >= 1:
        raise ParameterDomainError("T must be at least 1")
    if not R > 0:
        raise ParameterDomainError("R must be positive")
    br = _bracket(model, R)
    if br == 0.0:
        return 0.0
    return (4.0 * math.pi + 1.0) * T * br / delta


def _f_from_inputs(model, eps, T, R) -> tuple[float, float]:
    """``(F, log F)`` with ``delta = delta(eps)``; Wendland passes only when F vanishes."""
    br = _bracket(model, R)
    if br == 0.0:
        return 0.0, -math.inf
    log_f = math.log((4.0 * math.pi + 1.0) * T * br) - _log_delta(model, eps)
    return _exp(log_f), log_f


def _prefactor(M: float) -> float:
    return min(M, 1.0 + 2.0 * max(math.log(M), 0.0)) if M > 0 else 0.0


def _conditional_terms(t, b, B_C, sigma, F, log_F) -> tuple[float, float]:
    """The two F-driven terms, without the outer prefactor."""
    if F == 0.0:
        return 0.0, 0.0
    if F >= 1.0:
        return math.nan, math.nan
    sq = math.exp(0.5 * log_F)
    t3 = 8.0 * (t + 1.0) / math.sqrt(1.0 - F * F) * (B_C + 1.0 / sigma) * sq
    log_t4 = math.log((t + 1.0) * (1.0 + b**-2)) + 0.5 * log_F - 0.5 * b * b * (1.0 / F - 1.0)
    return t3, _exp(log_t4)


def _pair_term(b: float, rho_eps: float) -> float:
    return 5.0 * math.exp(-b * b * (1.0 - rho_eps) / 4.0)


def _truncation_surrogate(params: PropagationParams, t: float, radius: float) -> float:
    """``2 kappa int_{|x| > radius} Q(b_x) dx``."""
    return 2.0 * params.kappa * 2.0 * math.pi * radial_integral_to_inf(params, t, radius, 1)


def _p2(model, R) -> bool:
    return bool(check_p2(model, R).ok)


# ---------------------------------------------------------------------------
# Deterministic placements
# ---------------------------------------------------------------------------

def _det_common(inp: BoundInputs):
    if inp.case is not BoundCase.DETERMINISTIC:
        raise ParameterDomainError("deterministic bound needs case 'det'")
    if inp.config is None and inp.stats is None:
        raise ParameterDomainError("deterministic bound needs a configuration")
    p = inp.params
    st = inp.stats if inp.stats is not None else geometry_stats(inp.config, inp.R)
    T = st.T_upper
    b_star = b_of_r(p, st.d_star, inp.t)
    B_C = b_of_r(p, inp.C, inp.t)
    eps = st.eps_min

    trunc = 0.0
    M = 0.0
    notes = []
    if inp.config is not None and len(inp.config):
        norms = inp.config.norms
        qs = Q(b_of_r(p, norms, inp.t))
        M = float(np.sum(qs))
        trunc = 2.0 * float(np.sum(qs[norms > inp.C]))
        if not inp.isolated:
            outer = max(inp.C, inp.config.disc_radius)
            tail = _truncation_surrogate(p, inp.t, outer)
            trunc += tail
            M += tail / 2.0
            notes.append(f"transmitters beyond radius {outer!r} replaced by a Poisson surrogate")
    else:
        raise ParameterDomainError("deterministic bound needs the configuration for M(t)")
    F, log_F = _f_from_inputs(inp.model, eps, T, inp.R)
    rho_eps = _rho(inp.model, eps)
    details = {
        "M": M,
        "T": T,
        "T_lower": st.T_lower,
        "d_star": st.d_star,
        "eps_C": eps,
        "log_delta": _log_delta(inp.model, eps) if F != 0.0 or inp.model.kind is not Kind.WENDLAND else math.nan,
        "b_star": b_star,
        "B_C": B_C,
        "log_F": log_F,
        "R": inp.R,
        "C": inp.C,
    }
    return st, T, b_star, B_C, rho_eps, F, log_F, trunc, M, details, notes


def d2_bound_det(inp: BoundInputs) -> BoundReport:
    """Bound on ``d2`` between the spectrum and its Poisson process for a fixed configuration."""
    st, T, b_star, B_C, rho_eps, F, log_F, trunc, M, details, notes = _det_common(inp)
    pref = _prefactor(M)
    pre = {
        "b_star_positive": b_star > 0,
        "B_C_gt_1": B_C > 1,
        "B_C2_F_le_1": B_C * B_C * F <= 1,
        "F_lt_1": F < 1,
        "p2_at_R": _p2(inp.model, inp.R),
    }
    t3, t4 = _conditional_terms(inp.t, b_star, B_C, inp.params.sigma, F, log_F)
    terms = {
        "truncation": trunc,
        "marginal": pref * T * Q(b_star),
        "pair": pref * T * _pair_term(b_star, rho_eps),
        "conditional_mean": pref * t3,
        "conditional_tail": pref * t4,
    }
    details["prefactor"] = pref
    return BoundReport("d2_det", terms, pre, F, details, notes)


def dtv_bound_det(inp: BoundInputs) -> BoundReport:
    """Bound on total variation between the spectrum and its Poisson process, fixed configuration."""
    st, T, b_star, B_C, rho_eps, F, log_F, trunc, M, details, notes = _det_common(inp)
    pre = {"b_star_positive": b_star > 0}
    ratio = inp.C / inp.R
    area = (4.0 / 3.0) * (math.pi * ratio * ratio + (5.0 * math.pi + 3.0) * ratio)
    terms = {
        "truncation": trunc,
        "marginal": M * T * Q(b_star),
        "pair": M * T * _pair_term(b_star, rho_eps),
        "area": area * T * (math.sqrt(F) + 2.0 * F) if F > 0 else 0.0,
    }
    return BoundReport("dtv_det", terms, pre, F, details, notes)


# ---------------------------------------------------------------------------
# Random placements
# ---------------------------------------------------------------------------

def var_mean_measure_poisson(params: PropagationParams, s: float) -> float:
    """``Var M^Xi(s) = kappa int Q(b_x(s))^2 dx`` for Poisson placement on the plane."""
    if s <= 0:
        return 0.0
    return params.kappa * 2.0 * math.pi * radial_integral_to_inf(params, s, 0.0, 2)


def _sqrt_var_integral(var_fn: Callable[[float], float], t: float) -> float:
    """``int_0^t sqrt(var_fn(s)) ds`` by adaptive quadrature."""
    val, _ = integrate.quad(lambda s: math.sqrt(max(var_fn(s), 0.0)), 0.0, t,
                            epsabs=0.0, epsrel=1e-9, limit=200)
    return val


def d2_bound_poisson(inp: BoundInputs) -> BoundReport:
    """Bound on ``d2`` for homogeneous Poisson transmitter placement."""
    if inp.case is not BoundCase.POISSON:
        raise ParameterDomainError("Poisson bound needs case 'poisson'")
    for name in ("d", "eps0", "eps_C", "T_star"):
        if getattr(inp, name) is None:
            raise ParameterDomainError(f"Poisson bound needs {name}")
    p, m = inp.params, inp.model
    kappa, t, R, C = p.kappa, inp.t, inp.R, inp.C
    d, eps0, eps_C, T_star = inp.d, inp.eps0, inp.eps_C, inp.T_star
    if not (0 < d <= C):
        raise ParameterDomainError("need 0 < d <= C")
    b = b_of_r(p, d, t)
    B_C = b_of_r(p, C, t)
    F, log_F = _f_from_inputs(m, eps_C, T_star, R)
    M = mean_measure_limit(p, t)
    mu_T = 16.0 * kappa * R * R
    pre = {
        "T_star_ge_16_kappa_R2": T_star >= mu_T,
        "b_positive": b > 0,
        "B_C_gt_1": B_C > 1,
        "B_C2_F_le_1": B_C * B_C * F <= 1,
        "F_lt_1": F < 1,
        "p2_at_R": _p2(m, R),
    }
    var_fn = lambda s: var_mean_measure_poisson(p, s)  # noqa: E731
    t3, t4 = _conditional_terms(t, b, B_C, p.sigma, F, log_F)
    chern = poisson_chernoff(mu_T, T_star) if T_star >= mu_T else math.nan
    terms = {
        "truncation": _truncation_surrogate(p, t, C),
        "mean_deviation": math.sqrt(var_fn(t)),
        "mean_deviation_integral": _sqrt_var_integral(var_fn, t),
        "marginal": M * (kappa * math.pi * R * R + 1.0) * Q(b),
        "pair": 5.0 * kappa * math.pi * M * (
            eps0 * eps0 + R * R * math.exp(-b * b * (1.0 - _rho(m, eps0)) / 4.0)
        ),
        "conditional_mean": M * t3,
        "conditional_tail": M * t4,
        "origin": kappa * math.pi * d * d,
        "count_excess": (C / R + 1.0) ** 2 * chern,
        "separation": (2.0 * C / eps_C + 1.0) ** 2 * (4.0 * kappa * eps_C * eps_C) ** 2,
    }
    details = {"M": M, "b": b, "B_C": B_C, "log_F": log_F, "log_delta": _log_delta(m, eps_C),
               "R": R, "C": C, "d": d, "eps0": eps0, "eps_C": eps_C, "T_star": T_star}
    return BoundReport("d2_poisson", terms, pre, F, details)


def hardcore_mean_deviation_mc(
    params: PropagationParams,
    kappa_parent: float,
    eps_star: float,
    t: float,
    radius: float,
    n_rep: int,
    rng: np.random.Generator,
    n_grid: int = 257,
) -> dict:
    """Monte Carlo estimate of ``E|M^Xi(t) - M(t)|`` and ``E int_0^t |M^Xi(s) - M(s)| ds``.

    Matérn II configurations are drawn on the disc of the given radius and
    compared with the disc mean ``kappa 2 pi int_0^radius Q r dr``. The
    s-integral uses the trapezoid rule on ``n_grid`` equispaced points.
    Returns means and standard errors.
    """
    if n_rep < 30:
        raise InsufficientReplicationsError(f"Monte Carlo mean deviation needs n_rep >= 30, got {n_rep}")
    kappa = matern2_intensity(kappa_parent, eps_star)
    p = PropagationParams(params.K, params.beta, params.sigma, kappa)
    grid = np.linspace(0.0, t, n_grid)
    s_pos = grid[1:]
    mean_disc = np.array([kappa * 2.0 * math.pi * _radial_integral(p, s, 0.0, radius, 1) for s in s_pos])
    dev_t = np.empty(n_rep)
    dev_int = np.empty(n_rep)
    for r in range(n_rep):
        cfg = gen_hardcore_matern2(kappa_parent, eps_star, radius, rng)
        m_xi = mean_measure_det(p, cfg, s_pos) if len(cfg) else np.zeros_like(s_pos)
        diff = np.abs(np.concatenate([[0.0], m_xi - mean_disc]))
        dev_t[r] = diff[-1]
        dev_int[r] = np.trapezoid(diff, grid)
    se = lambda a: float(a.std(ddof=1) / math.sqrt(len(a)))  # noqa: E731
    return {
        "mean_deviation": float(dev_t.mean()),
        "mean_deviation_se": se(dev_t),
        "mean_deviation_integral": float(dev_int.mean()),
        "mean_deviation_integral_se": se(dev_int),
        "mean_disc": float(mean_disc[-1]),
        "n_rep": n_rep,
    }


def d2_bound_hardcore(
    inp: BoundInputs,
    mean_dev_mode: MeanDevMode | str = MeanDevMode.USER_GAMMA,
    *,
    gamma_plus: float | None = None,
    kappa_parent: float | None = None,
    mc_radius: float | None = None,
    n_rep: int = 100,
    rng: np.random.Generator | None = None,
) -> BoundReport:
    """Bound on ``d2`` for a stationary hard-core placement with distance ``eps_star``.

    ``params.kappa`` must be the hard-core intensity. The mean-deviation
    terms come either from Monte Carlo over Matérn II configurations
    (``kappa_parent``, ``mc_radius``, ``n_rep``, ``rng``) or from the
    variance bound ``kappa int Q^2 + 2 gamma_plus M(s) Q(b_{1/sigma}(s))``
    with a caller-supplied total positive variation ``gamma_plus`` of the
    reduced covariance measure; the latter needs ``sigma > 2 / eps_star``.
    """
    mode = MeanDevMode(mean_dev_mode)
    if inp.case is not BoundCase.HARDCORE:
        raise ParameterDomainError("hard-core bound needs case 'hardcore'")
    if inp.eps_star is None or inp.d is None:
        raise ParameterDomainError("hard-core bound needs eps_star and d")
    p, m = inp.params, inp.model
    kappa, t, R, C, d, es = p.kappa, inp.t, inp.R, inp.C, inp.d, inp.eps_star
    if not (0 < d <= C):
        raise ParameterDomainError("need 0 < d <= C")
    T_star = 4.0 * ((R + es / 2.0) / es) ** 2
    b = b_of_r(p, d, t)
    B_C = b_of_r(p, C, t)
    F, log_F = _f_from_inputs(m, es, T_star, R)
    M = mean_measure_limit(p, t)
    pre = {
        "b_positive": b > 0,
        "B_C_gt_1": B_C > 1,
        "B_C2_F_le_1": B_C * B_C * F <= 1,
        "F_lt_1": F < 1,
        "p2_at_R": _p2(m, R),
    }
    details = {"M": M, "b": b, "B_C": B_C, "log_F": log_F, "T_star": T_star,
               "log_delta": _log_delta(m, es), "R": R, "C": C, "d": d, "eps_star": es}
    notes = []
    if mode is MeanDevMode.MONTE_CARLO:
        if kappa_parent is None or rng is None:
            raise ParameterDomainError("Monte Carlo mode needs kappa_parent and rng")
        radius = mc_radius if mc_radius is not None else min(C, 50.0)
        mc = hardcore_mean_deviation_mc(p, kappa_parent, es, t, radius, n_rep, rng)
        dev_t, dev_int = mc["mean_deviation"], mc["mean_deviation_integral"]
        details.update({"mean_deviation_se": mc["mean_deviation_se"],
                        "mean_deviation_integral_se": mc["mean_deviation_integral_se"],
                        "mc_radius": radius, "n_rep": n_rep})
        notes.append("mean-deviation terms are Monte Carlo estimates; see the reported standard errors")
    else:
        if gamma_plus is None or gamma_plus < 0:
            raise ParameterDomainError("user-gamma mode needs gamma_plus >= 0")
        pre["sigma_gt_2_over_eps_star"] = p.sigma > 2.0 / es

        def var_fn(s):
            if s <= 0:
                return 0.0
            return var_mean_measure_poisson(p, s) + 2.0 * gamma_plus * mean_measure_limit(p, s) * Q(
                b_of_r(p, 1.0 / p.sigma, s)
            )

        dev_t = math.sqrt(var_fn(t))
        dev_int = _sqrt_var_integral(var_fn, t)
        details["gamma_plus"] = gamma_plus
    t3, t4 = _conditional_terms(t, b, B_C, p.sigma, F, log_F)
    terms = {
        "truncation": _truncation_surrogate(p, t, C),
        "mean_deviation": dev_t,
        "mean_deviation_integral": dev_int,
        "marginal": M * T_star * Q(b),
        "pair": M * T_star * _pair_term(b, _rho(m, es)),
        "origin": kappa * math.pi * d * d,
        "conditional_mean": M * t3,
        "conditional_tail": M * t4,
    }
    return BoundReport("d2_hardcore", terms, pre, F, details, notes)


# ---------------------------------------------------------------------------
# Auxiliary inequalities
# ---------------------------------------------------------------------------

def gamma_quadform_bound(delta: float, T: float, model: CorrelationModel, R: float) -> float:
    """Upper bound on ``gamma' Gamma^-1 gamma``; identical to :func:`f_factor`."""
    return f_factor(delta, T, model, R)


def gamma_quadform_exact(model: CorrelationModel, x0, points) -> float:
    """``gamma' Gamma^-1 gamma`` with ``gamma_j = rho(x0, x_j)`` and ``Gamma`` the points' correlation matrix."""
    from .corrfuncs import corr_matrix, eval_rho

    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    if len(pts) == 0:
        return 0.0
    x0 = np.asarray(x0, dtype=float).reshape(2)
    gamma = np.atleast_1d(np.asarray(eval_rho(model, np.hypot(*(pts - x0).T)), dtype=float))
    chol, _ = _cholesky_with_ridge(corr_matrix(model, pts))
    w = np.linalg.solve(chol, gamma)
    return float(w @ w)


def dtv_normal_bound(m: float, s: float) -> float:
    """``2 |1 - s^2| + sqrt(pi / 2) |m|``, bounding ``dTV(N(m, s^2), N(0, 1))``."""
    if not s > 0:
        raise ParameterDomainError("s must be positive")
    return 2.0 * abs(1.0 - s * s) + math.sqrt(math.pi / 2.0) * abs(m)


def _normal_crossings(m: float, s: float) -> list:
    """Points where the N(m, s^2) and N(0, 1) densities agree."""
    a = s * s - 1.0
    bq = 2.0 * m
    c = -m * m - 2.0 * s * s * math.log(s)
    if abs(a) < 1e-15:
        return [] if bq == 0 else [-c / bq]
    disc = bq * bq - 4.0 * a * c
    if disc < 0:
        return []
    sq = math.sqrt(disc)
    return sorted({(-bq - sq) / (2.0 * a), (-bq + sq) / (2.0 * a)})


def dtv_normal_exact(m: float, s: float) -> float:
    """``(1/2) int |phi_{m,s} - phi_{0,1}|`` by adaptive quadrature between density crossings."""
    if not s > 0:
        raise ParameterDomainError("s must be positive")
    f = lambda x: abs(stats.norm.pdf(x, m, s) - stats.norm.pdf(x))  # noqa: E731
    span = 12.0 * max(1.0, s) + abs(m)
    cuts = [-span] + [c for c in _normal_crossings(m, s) if -span < c < span] + [span]
    total = 0.0
    for a, b in zip(cuts[:-1], cuts[1:]):
        val, _ = integrate.quad(f, a, b, epsabs=1e-11, epsrel=1e-11, limit=200)
        total += val
    return 0.5 * total


def poisson_chernoff(mu: float, s: float) -> float:
    """Chernoff bound ``exp(-s log(s / mu) + s - mu)`` on ``P(Poisson(mu) >= s)``."""
    if not mu > 0:
        raise ParameterDomainError("mu must be positive")
    if s < mu:
        raise ParameterDomainError("Chernoff bound needs s >= mu")
    return math.exp(-s * math.log(s / mu) + s - mu)


def _as_table(L, t):
    if callable(L):
        return None
    xs, ys = (np.asarray(v, dtype=float) for v in L)
    if xs.shape != ys.shape or xs.ndim != 1 or len(xs) < 2:
        raise ParameterDomainError("mean-measure table needs matching 1-d knots and values")
    if np.any(np.diff(xs) <= 0):
        raise ParameterDomainError("table knots must be strictly increasing")
    if xs[0] > 0 or xs[-1] < t:
        raise ParameterDomainError("table must cover [0, t]")
    return xs, ys


def _check_monotone(vals: np.ndarray):
    if np.any(np.diff(vals) < -1e-12 * max(1.0, float(np.max(np.abs(vals))))):
        raise ParameterDomainError("mean-measure function is not non-decreasing")


def _abs_linear_integral(x0, x1, d0, d1):
    """``int_x0^x1 |linear|`` where the linear function goes from d0 to d1."""
    h = x1 - x0
    if d0 * d1 >= 0:
        return 0.5 * h * (abs(d0) + abs(d1))
    return 0.5 * h * (d0 * d0 + d1 * d1) / (abs(d0) + abs(d1))


def d2_poisson_poisson(L1, L2, t: float, n_check: int = 1001) -> float:
    """``int_0^t |L1 - L2| ds + |L1(t) - L2(t)|`` bounding d2 between two Poisson processes.

    ``L1`` and ``L2`` are callables or piecewise-linear tables ``(knots, values)``;
    with two tables the integral is exact.
    """
    if not t > 0:
        raise ParameterDomainError("t must be positive")
    tab1, tab2 = _as_table(L1, t), _as_table(L2, t)
    if tab1 is not None and tab2 is not None:
        for _, ys in (tab1, tab2):
            _check_monotone(ys)
        knots = np.union1d(tab1[0], tab2[0])
        knots = np.union1d(knots[(knots >= 0) & (knots <= t)], [0.0, t])
        diff = np.interp(knots, *tab1) - np.interp(knots, *tab2)
        integral = math.fsum(_abs_linear_integral(knots[i], knots[i + 1], diff[i], diff[i + 1])
                             for i in range(len(knots) - 1))
        return integral + abs(diff[-1])

    f1 = L1 if tab1 is None else (lambda s: float(np.interp(s, *tab1)))
    f2 = L2 if tab2 is None else (lambda s: float(np.interp(s, *tab2)))
    grid = np.linspace(0.0, t, n_check)
    v1 = np.array([f1(s) for s in grid])
    v2 = np.array([f2(s) for s in grid])
    _check_monotone(v1)
    _check_monotone(v2)
    # locate sign changes so quad integrates smooth pieces
    d = v1 - v2
    breaks = [grid[i] for i in range(len(grid) - 1) if d[i] * d[i + 1] < 0]
    integral, _ = integrate.quad(lambda s: abs(f1(s) - f2(s)), 0.0, t, epsabs=1e-13,
                                 epsrel=1e-11, limit=500, points=breaks[:400] or None)
    return integral + abs(f1(t) - f2(t))


# ---------------------------------------------------------------------------
# Convergence schedules
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Schedule:
    C: float
    R: float
    d: float
    eps0: float
    eps_C: float
    T_star: float | None


def eps0_of(model: CorrelationModel, sigma: float, tol: float = 1e-10) -> float:
    """``1/sigma + sup{eps >= 0 : 1 - rho_tilde(eps) <= 1/sigma}`` by bisection."""
    level = 1.0 - 1.0 / sigma
    if level <= 0:
        return math.inf
    if _rho(model, 0.0) < level:
        return 1.0 / sigma
    lo, hi = 0.0, 1e-6
    while _rho(model, hi) >= level:
        lo, hi = hi, hi * 2.0
        if hi > 1e12:
            return math.inf
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if _rho(model, mid) >= level:
            lo = mid
        else:
            hi = mid
    return 1.0 / sigma + lo


def convergence_schedule(
    sigma: float,
    a: float,
    params: PropagationParams,
    case: BoundCase | str,
    model: CorrelationModel | None = None,
    bound: str = "d2",
) -> Schedule:
    """Parameter choices along which the bounds vanish as ``sigma`` grows.

    ``a`` is the tail exponent of ``rho_tilde``. ``bound`` selects the
    deterministic-case radius: ``"d2"`` uses ``R = sigma^(2/a)`` and
    ``"dtv"`` uses ``R = exp(2 sigma^2 / (a beta^2) + 2 sigma^1.1 / a)``.
    ``eps0`` is only computed when ``model`` is given.
    """
    if not (sigma > 0 and a > 0):
        raise ParameterDomainError("sigma and a must be positive")
    case = BoundCase(case)
    beta = params.beta
    C = math.exp(sigma**2 / beta**2 + sigma**1.1)
    if case is BoundCase.DETERMINISTIC:
        if bound == "dtv":
            R = math.exp(2.0 * sigma**2 / (a * beta**2) + 2.0 * sigma**1.1 / a)
        elif bound == "d2":
            R = sigma ** (2.0 / a)
        else:
            raise ParameterDomainError("bound must be 'd2' or 'dtv'")
    elif case is BoundCase.POISSON:
        R = sigma**3
    else:
        R = sigma ** (2.0 / a)
    eps_C = math.exp(-(sigma**2) / beta**2 - 2.0 * sigma**1.1)
    T_star = 16.0 * math.e * params.kappa * R * R if case is BoundCase.POISSON else None
    eps0 = eps0_of(model, sigma) if model is not None else math.nan
    return Schedule(C=C, R=R, d=sigma**-2, eps0=eps0, eps_C=eps_C, T_star=T_star)
