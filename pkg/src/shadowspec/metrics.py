"""Distances and diagnostics for spectra and count distributions."""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from scipy.optimize import linear_sum_assignment

from .errors import InsufficientReplicationsError, ParameterDomainError

__all__ = [
    "CountStats",
    "ospa",
    "count_stats",
    "pp_points",
    "pp_shape",
    "dtv_counts",
    "dispersion",
    "chi2_poisson_gof",
    "write_pp_csv",
    "write_count_stats_csv",
]


@dataclass(frozen=True)
class CountStats:
    """Sample summary of the counts ``N(t)`` over replications."""

    n_reps: int
    mean: float
    variance: float
    pmf: dict
    thresholds: tuple = field(default_factory=tuple)

    def support(self) -> np.ndarray:
        return np.array(sorted(self.pmf), dtype=int)


def ospa(psi, upsilon, cutoff: float = 1.0) -> float:
    """OSPA distance with order 1 between finite configurations on the line.

    Pairs cost ``min(|x - y|, cutoff)``, each unpaired point costs
    ``cutoff``, and the total is divided by the larger cardinality times
    ``cutoff`` so the result lies in ``[0, 1]``. Two empty configurations
    are at distance 0.
    """
    x = np.asarray(psi, dtype=float).ravel()
    y = np.asarray(upsilon, dtype=float).ravel()
    n, m = len(x), len(y)
    big = max(n, m)
    if big == 0:
        return 0.0
    if min(n, m) == 0:
        return 1.0
    cost = np.minimum(np.abs(x[:, None] - y[None, :]), cutoff)
    rows, cols = linear_sum_assignment(cost)
    total = cost[rows, cols].sum() + cutoff * (big - min(n, m))
    return float(total / (cutoff * big))


def count_stats(samples, thresholds=()) -> CountStats:
    """Mean, unbiased variance and empirical pmf of integer counts."""
    arr = np.asarray(samples).ravel()
    if arr.size < 2:
        raise InsufficientReplicationsError("count statistics need at least two samples")
    if not np.all(arr == np.round(arr)) or np.any(arr < 0):
        raise ParameterDomainError("counts must be non-negative integers")
    arr = arr.astype(np.int64)
    n = arr.size
    tally = Counter(arr.tolist())
    pmf = {int(k): v / n for k, v in sorted(tally.items())}
    return CountStats(n, float(arr.mean()), float(arr.var(ddof=1)), pmf, tuple(thresholds))


def pp_points(cs: CountStats, poisson_mean: float) -> list:
    """``(ecdf(k), poisson_cdf(k))`` for each observed count ``k``, ascending."""
    if not poisson_mean > 0:
        raise ParameterDomainError("poisson_mean must be positive")
    ks = cs.support()
    probs = np.array([cs.pmf[int(k)] for k in ks])
    ecdf = np.minimum(np.cumsum(probs), 1.0)
    pcdf = stats.poisson.cdf(ks, poisson_mean)
    return [(float(e), float(p)) for e, p in zip(ecdf, pcdf)]


def pp_shape(cs: CountStats, poisson_mean: float) -> dict:
    """Fractions of P-P points on each side of the diagonal.

    A point ``(ecdf, pcdf)`` lies below the diagonal when ``pcdf < ecdf``.
    Counts below ``poisson_mean`` are "low", counts above it "high"; the
    final point, where the empirical CDF reaches 1, is left out because it
    sits below the diagonal for any sample. Overdispersion shows as low
    points below and high points above (a flipped S).
    """
    ks = cs.support()
    pts = pp_points(cs, poisson_mean)
    low = [p < e for k, (e, p) in zip(ks, pts) if k < poisson_mean and e < 1.0]
    high = [p > e for k, (e, p) in zip(ks, pts) if k > poisson_mean and e < 1.0]
    frac = lambda v: float(np.mean(v)) if v else float("nan")  # noqa: E731
    return {"low_below": frac(low), "high_above": frac(high), "n_low": len(low), "n_high": len(high)}


def dtv_counts(cs: CountStats, poisson_mean: float) -> float:
    """Total variation between the empirical pmf and ``Poisson(poisson_mean)``.

    Integers without empirical mass up to the largest observed count are
    included, and the Poisson mass beyond it is added analytically.
    """
    if not poisson_mean > 0:
        raise ParameterDomainError("poisson_mean must be positive")
    kmax = int(max(cs.pmf))
    ks = np.arange(kmax + 1)
    emp = np.array([cs.pmf.get(int(k), 0.0) for k in ks])
    pois = stats.poisson.pmf(ks, poisson_mean)
    tail = float(stats.poisson.sf(kmax, poisson_mean))
    return float(0.5 * (np.abs(emp - pois).sum() + tail))


def dispersion(cs: CountStats) -> float:
    """Variance-to-mean ratio."""
    if not cs.mean > 0:
        raise ParameterDomainError("dispersion needs a positive mean")
    return cs.variance / cs.mean


def chi2_poisson_gof(samples, poisson_mean: float, min_expected: float = 5.0) -> tuple[float, int, float]:
    """Chi-square goodness of fit of integer counts to ``Poisson(poisson_mean)``.

    Cells ``0, 1, ...`` are merged from the right until every cell expects
    at least ``min_expected`` observations; the last cell takes the whole
    upper tail. Returns ``(statistic, degrees of freedom, p-value)``; no
    parameter is estimated, so ``dof = cells - 1``.
    """
    arr = np.asarray(samples).ravel().astype(np.int64)
    n = arr.size
    if n < 2:
        raise InsufficientReplicationsError("goodness of fit needs at least two samples")
    if not poisson_mean > 0:
        raise ParameterDomainError("poisson_mean must be positive")
    kmax = max(int(arr.max()), int(stats.poisson.ppf(1 - 1e-12, poisson_mean)))
    probs = stats.poisson.pmf(np.arange(kmax + 1), poisson_mean)
    obs = np.bincount(arr, minlength=kmax + 1).astype(float)
    # cells are [edges[i], edges[i+1]); the last one is open to the right
    edges = [0]
    acc = 0.0
    for k in range(kmax + 1):
        acc += probs[k] * n
        if acc >= min_expected:
            edges.append(k + 1)
            acc = 0.0
    if len(edges) < 3:
        raise ParameterDomainError("too few samples for a chi-square test at this mean")
    edges[-1] = kmax + 1
    exp_cells = np.array([probs[a:b].sum() for a, b in zip(edges[:-1], edges[1:])])
    exp_cells[-1] += stats.poisson.sf(kmax, poisson_mean)
    obs_cells = np.array([obs[a:b].sum() for a, b in zip(edges[:-1], edges[1:])])
    res = stats.chisquare(obs_cells, exp_cells * n)
    return float(res.statistic), len(obs_cells) - 1, float(res.pvalue)


def write_pp_csv(path, points, ks=None):
    """Write P-P pairs with header ``k,ecdf,pcdf``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["k", "ecdf", "pcdf"])
        for i, (e, p) in enumerate(points):
            w.writerow([int(ks[i]) if ks is not None else i, repr(e), repr(p)])


def write_count_stats_csv(path, cs: CountStats):
    """Write ``n_reps,mean,variance`` then ``k,pmf`` rows."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["n_reps", "mean", "variance"])
        w.writerow([cs.n_reps, repr(cs.mean), repr(cs.variance)])
        w.writerow(["k", "pmf"])
        for k, v in cs.pmf.items():
            w.writerow([k, repr(v)])

