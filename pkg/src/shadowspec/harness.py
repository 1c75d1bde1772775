"""Monte Carlo experiments: configuration files, seeded parallel replications, persistence.

Replication ``r`` draws everything it needs (placement, field) from its
own stream ``default_rng(SeedSequence(seed, spawn_key=(r,)))``, so the
per-replication records do not depend on how replications are spread
over workers.
"""

from __future__ import annotations

import configparser
import csv
import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .bounds import (
    BoundCase,
    BoundInputs,
    MeanDevMode,
    convergence_schedule,
    d2_bound_det,
    d2_bound_hardcore,
    d2_bound_poisson,
    dtv_bound_det,
)
from .corrfuncs import CorrelationModel
from .errors import ConfigError, ParameterDomainError
from .gfield import DENSE_LIMIT, SpectralSampler, factorize, shadow, sigma_from_db
from .metrics import CountStats, count_stats, dispersion, dtv_counts
from .placement import (
    PlacementKind,
    PointConfig,
    gen_hardcore_matern2,
    gen_hex_grid,
    gen_poisson,
    load_points,
    matern2_intensity,
)
from .spectrum import (
    PropagationParams,
    Q,
    b_of_r,
    h_of,
    mean_measure_det,
    mean_measure_poisson_disc,
    threshold_from_dbm,
)

__all__ = [
    "PlacementSpec",
    "BoundsSpec",
    "ExperimentConfig",
    "ExperimentResult",
    "CHUNK",
    "load_config",
    "parse_config",
    "dump_config",
    "rep_rng",
    "relevant_subset",
    "expected_counts",
    "run_experiment",
    "write_result",
    "read_records",
    "run_bounds",
]

#: replications per work unit; fixed so results never depend on the worker count
CHUNK = 50


@dataclass(frozen=True)
class PlacementSpec:
    kind: PlacementKind
    C: float
    kappa: float | None = None
    kappa_parent: float | None = None
    eps_star: float | None = None
    points_file: str | None = None


@dataclass(frozen=True)
class BoundsSpec:
    case: BoundCase = BoundCase.DETERMINISTIC
    which: str = "both"
    t: float | None = None
    R: float | None = None
    C: float | None = None
    a: float = 1.0
    isolated: bool = False
    d: float | None = None
    eps0: float | None = None
    eps_C: float | None = None
    T_star: float | None = None
    gamma_plus: float | None = None
    mean_dev: MeanDevMode = MeanDevMode.USER_GAMMA
    mc_reps: int = 100
    mc_radius: float | None = None
    sigma_sweep: tuple = ()


@dataclass(frozen=True)
class ExperimentConfig:
    placement: PlacementSpec
    K: float
    beta: float
    sigma: float
    correlation: CorrelationModel
    thresholds: tuple
    n_reps: int = 1000
    seed: int = 0
    sampler: str = "exact"
    n_features: int = 2000
    workers: int = 1
    relevance_tol: float = 1e-6
    out: str = "results/run"
    power_mw: float | None = None
    bounds: BoundsSpec = field(default_factory=BoundsSpec)

    @property
    def intensity(self) -> float:
        pl = self.placement
        if pl.kind is PlacementKind.HARDCORE:
            return matern2_intensity(pl.kappa_parent, pl.eps_star)
        if pl.kappa is not None:
            return pl.kappa
        return float("nan")

    def params(self, sigma: float | None = None) -> PropagationParams:
        kappa = self.intensity
        if not (kappa > 0):
            kappa = 1.0
        return PropagationParams(self.K, self.beta, self.sigma if sigma is None else sigma, kappa)


# ---------------------------------------------------------------------------
# Configuration files
# ---------------------------------------------------------------------------

_SECTIONS = ("placement", "propagation", "shadowing", "correlation", "experiment", "bounds")


def _get_float(sec, key, field_name, required=False, default=None):
    if key not in sec:
        if required:
            raise ConfigError(f"missing required field {field_name}", (field_name,))
        return default
    try:
        return float(sec[key])
    except ValueError:
        raise ConfigError(f"field {field_name} is not a number: {sec[key]!r}", (field_name,)) from None


def _get_int(sec, key, field_name, default):
    if key not in sec:
        return default
    try:
        return int(sec[key])
    except ValueError:
        raise ConfigError(f"field {field_name} is not an integer: {sec[key]!r}", (field_name,)) from None


def _get_list(sec, key, field_name):
    try:
        return [float(v) for v in sec[key].replace(",", " ").split()]
    except ValueError:
        raise ConfigError(f"field {field_name} must be a list of numbers", (field_name,)) from None


def _parse_sweep(text: str, field_name="bounds.sigma_sweep") -> tuple:
    text = text.strip()
    if not text:
        return ()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ConfigError(f"{field_name} must be a:b:n", (field_name,))
        try:
            a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
        except ValueError:
            raise ConfigError(f"{field_name} must be a:b:n", (field_name,)) from None
        if n < 1:
            raise ConfigError(f"{field_name} needs n >= 1", (field_name,))
        return tuple(float(v) for v in np.linspace(a, b, n))
    try:
        return tuple(float(v) for v in text.replace(",", " ").split())
    except ValueError:
        raise ConfigError(f"{field_name} must be numbers or a:b:n", (field_name,)) from None


def parse_config(text: str) -> ExperimentConfig:
    """Parse configuration text; see ``docs/config.md`` for the grammar."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed configuration: {exc}") from None
    unknown = [s for s in cp.sections() if s not in _SECTIONS]
    if unknown:
        raise ConfigError(f"unknown section(s): {', '.join(unknown)}", tuple(unknown))
    for s in ("placement", "propagation", "shadowing", "correlation", "experiment"):
        if s not in cp:
            raise ConfigError(f"missing section [{s}]", (s,))

    pl = cp["placement"]
    try:
        kind = PlacementKind(pl.get("kind", "").strip().lower())
    except ValueError:
        raise ConfigError("placement.kind must be one of hex, poisson, hardcore, explicit", ("placement.kind",)) from None
    C = _get_float(pl, "C", "placement.C", required=True)
    placement = PlacementSpec(
        kind=kind,
        C=C,
        kappa=_get_float(pl, "kappa", "placement.kappa"),
        kappa_parent=_get_float(pl, "kappa_parent", "placement.kappa_parent"),
        eps_star=_get_float(pl, "eps_star", "placement.eps_star"),
        points_file=pl.get("points_file"),
    )
    bad = []
    if kind in (PlacementKind.HEX, PlacementKind.POISSON) and not (placement.kappa or 0) > 0:
        bad.append("placement.kappa")
    if kind is PlacementKind.HARDCORE:
        if not (placement.kappa_parent or 0) > 0:
            bad.append("placement.kappa_parent")
        if not (placement.eps_star or 0) > 0:
            bad.append("placement.eps_star")
    if kind is PlacementKind.EXPLICIT and not placement.points_file:
        bad.append("placement.points_file")
    if not C > 0:
        bad.append("placement.C")

    pr = cp["propagation"]
    K = _get_float(pr, "K", "propagation.K", required=True)
    beta = _get_float(pr, "beta", "propagation.beta", required=True)
    power_mw = _get_float(pr, "power_mw", "propagation.power_mw")
    if not K > 0:
        bad.append("propagation.K")
    if not beta > 2:
        bad.append("propagation.beta")

    sh = cp["shadowing"]
    if "sigma" in sh and "sigma_db" in sh:
        raise ConfigError("give shadowing.sigma or shadowing.sigma_db, not both", ("shadowing.sigma",))
    if "sigma" in sh:
        sigma = _get_float(sh, "sigma", "shadowing.sigma")
    elif "sigma_db" in sh:
        sigma = sigma_from_db(_get_float(sh, "sigma_db", "shadowing.sigma_db"))
    else:
        raise ConfigError("missing shadowing.sigma", ("shadowing.sigma",))
    if not sigma > 0:
        bad.append("shadowing.sigma")

    co = cp["correlation"]
    try:
        model = CorrelationModel(
            co.get("kind", "exponential"),
            _get_float(co, "scale", "correlation.scale", default=1.0),
            _get_float(co, "smoothness", "correlation.smoothness", default=0.5),
        )
    except ParameterDomainError as exc:
        raise ConfigError(f"correlation: {exc}", ("correlation.kind",)) from None

    ex = cp["experiment"]
    if "thresholds" in ex and "thresholds_dbm" in ex:
        raise ConfigError("give experiment.thresholds or experiment.thresholds_dbm, not both",
                          ("experiment.thresholds",))
    if "thresholds" in ex:
        ts = _get_list(ex, "thresholds", "experiment.thresholds")
    elif "thresholds_dbm" in ex:
        if power_mw is None:
            raise ConfigError("thresholds_dbm needs propagation.power_mw", ("propagation.power_mw",))
        ts = [float(v) for v in threshold_from_dbm(_get_list(ex, "thresholds_dbm", "experiment.thresholds_dbm"),
                                                     power_mw)]
        ts.sort()
    else:
        raise ConfigError("missing experiment.thresholds", ("experiment.thresholds",))
    if not ts or any(t <= 0 for t in ts) or any(b <= a for a, b in zip(ts, ts[1:])):
        bad.append("experiment.thresholds")
    n_reps = _get_int(ex, "n_reps", "experiment.n_reps", 1000)
    if n_reps < 1:
        bad.append("experiment.n_reps")
    seed = _get_int(ex, "seed", "experiment.seed", 0)
    if not 0 <= seed < 2**64:
        bad.append("experiment.seed")
    sampler = ex.get("sampler", "exact").strip().lower()
    if sampler not in ("exact", "spectral"):
        bad.append("experiment.sampler")
    workers = _get_int(ex, "workers", "experiment.workers", 1)
    if workers < 1:
        bad.append("experiment.workers")
    tol = _get_float(ex, "relevance_tol", "experiment.relevance_tol", default=1e-6)
    if not 0 <= tol < 1:
        bad.append("experiment.relevance_tol")
    n_features = _get_int(ex, "n_features", "experiment.n_features", 2000)
    if n_features < 1:
        bad.append("experiment.n_features")

    bounds = BoundsSpec()
    if "bounds" in cp:
        bs = cp["bounds"]
        try:
            case = BoundCase(bs.get("case", "det").strip().lower())
        except ValueError:
            raise ConfigError("bounds.case must be det, poisson or hardcore", ("bounds.case",)) from None
        which = bs.get("which", "both").strip().lower()
        if which not in ("d2", "dtv", "both"):
            bad.append("bounds.which")
        try:
            mode = MeanDevMode(bs.get("mean_dev", "usergamma").strip().lower())
        except ValueError:
            raise ConfigError("bounds.mean_dev must be usergamma or montecarlo", ("bounds.mean_dev",)) from None
        try:
            isolated = bs.getboolean("isolated", fallback=False)
        except ValueError:
            raise ConfigError("bounds.isolated must be a boolean", ("bounds.isolated",)) from None
        bounds = BoundsSpec(
            case=case,
            which=which,
            t=_get_float(bs, "t", "bounds.t"),
            R=_get_float(bs, "R", "bounds.R"),
            C=_get_float(bs, "C", "bounds.C"),
            a=_get_float(bs, "a", "bounds.a", default=1.0),
            isolated=isolated,
            d=_get_float(bs, "d", "bounds.d"),
            eps0=_get_float(bs, "eps0", "bounds.eps0"),
            eps_C=_get_float(bs, "eps_C", "bounds.eps_C"),
            T_star=_get_float(bs, "T_star", "bounds.T_star"),
            gamma_plus=_get_float(bs, "gamma_plus", "bounds.gamma_plus"),
            mean_dev=mode,
            mc_reps=_get_int(bs, "mc_reps", "bounds.mc_reps", 100),
            mc_radius=_get_float(bs, "mc_radius", "bounds.mc_radius"),
            sigma_sweep=_parse_sweep(bs.get("sigma_sweep", "")),
        )
        if not bounds.a > 0:
            bad.append("bounds.a")

    if bad:
        raise ConfigError("invalid field(s): " + ", ".join(bad), tuple(bad))
    return ExperimentConfig(
        placement=placement,
        K=K,
        beta=beta,
        sigma=sigma,
        correlation=model,
        thresholds=tuple(ts),
        n_reps=n_reps,
        seed=seed,
        sampler=sampler,
        n_features=n_features,
        workers=workers,
        relevance_tol=tol,
        out=ex.get("out", "results/run"),
        power_mw=power_mw,
        bounds=bounds,
    )


def load_config(path) -> ExperimentConfig:
    """Read and parse a configuration file.

    Relative ``points_file`` entries are resolved against the config file's directory.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"configuration file not found: {path}")
    cfg = parse_config(path.read_text(encoding="utf-8"))
    pf = cfg.placement.points_file
    if pf and not os.path.isabs(pf):
        cfg = replace(cfg, placement=replace(cfg.placement, points_file=str(path.parent / pf)))
    return cfg


def dump_config(cfg: ExperimentConfig) -> str:
    """Serialize a configuration; ``parse_config(dump_config(c)) == c``."""
    cp = configparser.ConfigParser()
    cp.optionxform = str
    pl = cfg.placement
    cp["placement"] = {"kind": pl.kind.value, "C": repr(pl.C)}
    for key in ("kappa", "kappa_parent", "eps_star"):
        val = getattr(pl, key)
        if val is not None:
            cp["placement"][key] = repr(val)
    if pl.points_file:
        cp["placement"]["points_file"] = pl.points_file
    cp["propagation"] = {"K": repr(cfg.K), "beta": repr(cfg.beta)}
    if cfg.power_mw is not None:
        cp["propagation"]["power_mw"] = repr(cfg.power_mw)
    cp["shadowing"] = {"sigma": repr(cfg.sigma)}
    m = cfg.correlation
    cp["correlation"] = {"kind": m.kind.value, "scale": repr(m.scale), "smoothness": repr(float(m.smoothness))}
    cp["experiment"] = {
        "thresholds": " ".join(repr(t) for t in cfg.thresholds),
        "n_reps": str(cfg.n_reps),
        "seed": str(cfg.seed),
        "sampler": cfg.sampler,
        "n_features": str(cfg.n_features),
        "workers": str(cfg.workers),
        "relevance_tol": repr(cfg.relevance_tol),
        "out": cfg.out,
    }
    b = cfg.bounds
    sec = {"case": b.case.value, "which": b.which, "a": repr(b.a), "isolated": str(b.isolated).lower(),
           "mean_dev": b.mean_dev.value, "mc_reps": str(b.mc_reps)}
    for key in ("t", "R", "C", "d", "eps0", "eps_C", "T_star", "gamma_plus", "mc_radius"):
        val = getattr(b, key)
        if val is not None:
            sec[key] = repr(val)
    if b.sigma_sweep:
        sec["sigma_sweep"] = " ".join(repr(s) for s in b.sigma_sweep)
    cp["bounds"] = sec
    from io import StringIO

    buf = StringIO()
    cp.write(buf)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Replications
# ---------------------------------------------------------------------------

def rep_rng(seed: int, rep: int) -> np.random.Generator:
    """Independent stream for replication ``rep``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(rep,)))


def relevant_subset(params: PropagationParams, config: PointConfig, t_max: float, tol: float):
    """Drop the outermost transmitters whose total marginal probability is at most ``tol``.

    Returns the kept configuration and the dropped probability mass. The
    Gaussian field restricted to the kept points has the same law as the
    full field marginalized, so the count distribution moves by at most
    ``tol`` in total variation.
    """
    cfg = config.sorted_by_norm()
    if len(cfg) == 0 or tol <= 0:
        return cfg, 0.0
    q = Q(b_of_r(params, cfg.norms, t_max))
    tail = np.cumsum(q[::-1])[::-1]  # tail[i] = mass of points i..n-1
    drop = np.flatnonzero(tail <= tol)
    if drop.size == 0:
        return cfg, 0.0
    first = int(drop[0])
    kept = PointConfig(cfg.points[:first], cfg.disc_radius, cfg.kind, cfg.intensity, cfg.eps_star)
    return kept, float(tail[first])


def _build_placement(cfg: ExperimentConfig, rng: np.random.Generator | None) -> PointConfig:
    pl = cfg.placement
    if pl.kind is PlacementKind.HEX:
        return gen_hex_grid(pl.kappa, pl.C)
    if pl.kind is PlacementKind.EXPLICIT:
        conf = load_points(pl.points_file, C=None)
        pts = conf.points[conf.norms <= pl.C]
        return PointConfig(pts, pl.C, PlacementKind.EXPLICIT, pl.kappa or len(pts) / (math.pi * pl.C**2))
    if pl.kind is PlacementKind.POISSON:
        return gen_poisson(pl.kappa, pl.C, rng)
    return gen_hardcore_matern2(pl.kappa_parent, pl.eps_star, pl.C, rng)


def _is_random(cfg: ExperimentConfig) -> bool:
    return cfg.placement.kind in (PlacementKind.POISSON, PlacementKind.HARDCORE)


@dataclass
class _Shared:
    cfg: ExperimentConfig
    fixed: PointConfig | None
    factor: object | None
    h_fixed: np.ndarray | None


_STATE: _Shared | None = None


def _init_worker(state: _Shared):
    global _STATE
    _STATE = state


def _one_rep(state: _Shared, rep: int):
    cfg = state.cfg
    params = cfg.params()
    ts = np.asarray(cfg.thresholds)
    rng = rep_rng(cfg.seed, rep)
    ridge = 0.0
    excluded = 0.0
    if state.fixed is not None:
        conf, h = state.fixed, state.h_fixed
        n_all = len(conf)
        if cfg.sampler == "spectral":
            z = SpectralSampler(cfg.correlation, cfg.n_features).draw(conf.points, rng)
        else:
            z = state.factor.draw(rng)
            ridge = state.factor.ridge
    else:
        full = _build_placement(cfg, rng)
        n_all = len(full)
        conf, excluded = relevant_subset(params, full, ts[-1], cfg.relevance_tol)
        h = h_of(params, conf.norms) if len(conf) else np.zeros(0)
        if cfg.sampler == "spectral":
            z = SpectralSampler(cfg.correlation, cfg.n_features).draw(conf.points, rng)
        else:
            fac = factorize(cfg.correlation, conf.points)
            z = fac.draw(rng)
            ridge = fac.ridge
    y = np.sort(h / shadow(z, cfg.sigma, cfg.beta)) if len(h) else np.zeros(0)
    counts = np.searchsorted(y, ts, side="right")
    return counts, n_all, len(h), ridge, excluded


def _run_chunk(args):
    lo, hi = args
    rows = [_one_rep(_STATE, r) for r in range(lo, hi)]
    return lo, rows


@dataclass
class ExperimentResult:
    """Per-replication counts, per-threshold statistics and run metadata."""

    config: ExperimentConfig
    counts: np.ndarray  # (n_reps, n_thresholds)
    stats: dict  # threshold -> CountStats or None
    mean_measure: dict  # threshold -> expected count
    meta: dict

    @property
    def thresholds(self) -> tuple:
        return self.config.thresholds

    def summary(self) -> dict:
        out = {"seed": self.config.seed, "n_reps": int(self.counts.shape[0]), "thresholds": {}}
        for j, t in enumerate(self.thresholds):
            cs: CountStats | None = self.stats[t]
            mu = self.mean_measure[t]
            entry = {"mean_measure": mu}
            if cs is None:
                entry["notice"] = "statistics need at least two replications"
            else:
                entry.update(mean=cs.mean, variance=cs.variance,
                             dispersion=dispersion(cs) if cs.mean > 0 else None,
                             dtv_counts=dtv_counts(cs, mu) if mu > 0 else None)
            out["thresholds"][repr(float(t))] = entry
        out["meta"] = self.meta
        return out


def expected_counts(cfg: ExperimentConfig, fixed: PointConfig | None = None) -> dict:
    """Analytic ``E N(t)`` for every threshold of the experiment (full disc, no truncation)."""
    params = cfg.params()
    out = {}
    for t in cfg.thresholds:
        if fixed is not None:
            out[t] = float(mean_measure_det(params, fixed, t))
        else:
            out[t] = mean_measure_poisson_disc(params, cfg.placement.C, t)
    return out


def run_experiment(cfg: ExperimentConfig, workers: int | None = None) -> ExperimentResult:
    """Run ``cfg.n_reps`` replications and aggregate the counts per threshold.

    Deterministic placements are built and factorized once; random
    placements are redrawn in every replication.
    """
    workers = cfg.workers if workers is None else workers
    if workers < 1:
        raise ConfigError("workers must be at least 1", ("experiment.workers",))
    t0 = time.perf_counter()
    params = cfg.params()
    ts = cfg.thresholds
    fixed = factor = h_fixed = None
    excluded_fixed = 0.0
    if not _is_random(cfg):
        full = _build_placement(cfg, None)
        fixed, excluded_fixed = relevant_subset(params, full, ts[-1], cfg.relevance_tol)
        if cfg.sampler == "exact":
            if len(fixed) > DENSE_LIMIT:
                raise ParameterDomainError(
                    f"{len(fixed)} relevant points exceed the dense limit {DENSE_LIMIT}; "
                    "reduce placement.C or use sampler = spectral"
                )
            factor = factorize(cfg.correlation, fixed.points)
        h_fixed = h_of(params, fixed.norms) if len(fixed) else np.zeros(0)
        mean_measure = expected_counts(cfg, full)
        n_full = len(full)
    else:
        mean_measure = expected_counts(cfg)
        n_full = None
    state = _Shared(cfg, fixed, factor, h_fixed)
    chunks = [(lo, min(lo + CHUNK, cfg.n_reps)) for lo in range(0, cfg.n_reps, CHUNK)]
    results = {}
    if workers == 1:
        _init_worker(state)
        for ch in chunks:
            lo, rows = _run_chunk(ch)
            results[lo] = rows
    else:
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_worker, initargs=(state,)) as pool:
            for lo, rows in pool.map(_run_chunk, chunks):
                results[lo] = rows
    rows = [row for lo in sorted(results) for row in results[lo]]
    counts = np.array([r[0] for r in rows], dtype=np.int64).reshape(cfg.n_reps, len(ts))
    n_all = np.array([r[1] for r in rows], dtype=float)
    n_kept = np.array([r[2] for r in rows], dtype=float)
    ridges = np.array([r[3] for r in rows])
    excluded = np.array([r[4] for r in rows])
    area = math.pi * cfg.placement.C**2
    stats = {}
    for j, t in enumerate(ts):
        stats[t] = count_stats(counts[:, j], (t,)) if cfg.n_reps >= 2 else None
    meta = {
        "seed": cfg.seed,
        "n_reps": cfg.n_reps,
        "workers": workers,
        "sampler": cfg.sampler,
        "wall_time_s": time.perf_counter() - t0,
        "realized_intensity": float(n_all.mean() / area) if n_full is None else n_full / area,
        "target_intensity": cfg.intensity,
        "mean_points_simulated": float(n_kept.mean()),
        "ridge_events": int(np.count_nonzero(ridges)),
        "max_ridge": float(ridges.max()) if len(ridges) else 0.0,
        "max_excluded_mass": float(max(excluded.max() if len(excluded) else 0.0, excluded_fixed)),
        "relevance_tol": cfg.relevance_tol,
    }
    return ExperimentResult(cfg, counts, stats, mean_measure, meta)


def write_result(result: ExperimentResult, prefix: str | os.PathLike | None = None) -> tuple[Path, Path]:
    """Write ``<prefix>.csv`` (``rep,threshold,count``) and ``<prefix>.json`` (summary)."""
    prefix = Path(prefix if prefix is not None else result.config.out)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    csv_path = prefix.with_name(prefix.name + ".csv")
    json_path = prefix.with_name(prefix.name + ".json")
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["rep", "threshold", "count"])
        for r in range(result.counts.shape[0]):
            for j, t in enumerate(result.thresholds):
                w.writerow([r, repr(float(t)), int(result.counts[r, j])])
    json_path.write_text(json.dumps(result.summary(), indent=2) + "\n")
    return csv_path, json_path


def read_records(path) -> dict:
    """Read a per-replication CSV into ``{threshold: counts array}``."""
    out: dict = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or set(reader.fieldnames) != {"rep", "threshold", "count"}:
            raise ConfigError(f"{path}: expected header rep,threshold,count")
        for row in reader:
            out.setdefault(float(row["threshold"]), []).append(int(row["count"]))
    return {t: np.asarray(v) for t, v in out.items()}


# ---------------------------------------------------------------------------
# Bounds
# ---------------------------------------------------------------------------

def run_bounds(
    cfg: ExperimentConfig,
    case: BoundCase | str | None = None,
    sigmas=None,
    seed: int | None = None,
) -> list:
    """Evaluate the configured bound(s) at the config's sigma or along a sigma sweep.

    Returns a list of ``(sigma, BoundReport)`` pairs. Missing ``R``, ``C``,
    ``d``, ``eps0``, ``eps_C`` and ``T_star`` are taken from the
    convergence schedule with tail exponent ``bounds.a``.
    """
    b = cfg.bounds
    case = BoundCase(case) if case is not None else b.case
    if sigmas is None:
        sigmas = b.sigma_sweep or (cfg.sigma,)
    t = b.t if b.t is not None else cfg.thresholds[0]
    model = cfg.correlation
    fixed = None
    if case is BoundCase.DETERMINISTIC:
        if _is_random(cfg):
            raise ConfigError("deterministic bounds need a hex or explicit placement", ("placement.kind",))
        fixed = _build_placement(cfg, None)
        if len(fixed) == 0:
            raise ParameterDomainError("configuration is empty")
    elif case is BoundCase.HARDCORE and cfg.placement.kind is not PlacementKind.HARDCORE:
        raise ConfigError("hard-core bounds need placement.kind = hardcore", ("placement.kind",))
    elif case is BoundCase.POISSON and cfg.placement.kind is not PlacementKind.POISSON:
        raise ConfigError("Poisson bounds need placement.kind = poisson", ("placement.kind",))
    out = []
    for sigma in sigmas:
        params = cfg.params(sigma)
        which = "dtv" if b.which == "dtv" else "d2"
        sch = convergence_schedule(sigma, b.a, params, case, model, bound=which)
        R = b.R if b.R is not None else sch.R
        C = b.C if b.C is not None else max(sch.C, R)
        common = dict(params=params, model=model, t=t, R=R, C=C, case=case)
        if case is BoundCase.DETERMINISTIC:
            inp = BoundInputs(**common, config=fixed, isolated=b.isolated)
            if b.which in ("d2", "both"):
                out.append((sigma, d2_bound_det(inp)))
            if b.which in ("dtv", "both"):
                if b.R is None and b.which == "both":
                    sch_tv = convergence_schedule(sigma, b.a, params, case, model, bound="dtv")
                    inp = replace(inp, R=sch_tv.R, C=max(C, sch_tv.R))
                out.append((sigma, dtv_bound_det(inp)))
        elif case is BoundCase.POISSON:
            inp = BoundInputs(
                **common,
                d=b.d if b.d is not None else min(sch.d, C),
                eps0=b.eps0 if b.eps0 is not None else sch.eps0,
                eps_C=b.eps_C if b.eps_C is not None else sch.eps_C,
                T_star=b.T_star if b.T_star is not None else sch.T_star,
            )
            out.append((sigma, d2_bound_poisson(inp)))
        else:
            inp = BoundInputs(**common, d=b.d if b.d is not None else min(sch.d, C),
                              eps_star=cfg.placement.eps_star)
            rng = np.random.default_rng(np.random.SeedSequence(cfg.seed if seed is None else seed))
            out.append((sigma, d2_bound_hardcore(
                inp, b.mean_dev, gamma_plus=b.gamma_plus, kappa_parent=cfg.placement.kappa_parent,
                mc_radius=b.mc_radius, n_rep=b.mc_reps, rng=rng,
            )))
    return out


def write_bound_reports(reports, prefix) -> tuple[Path, Path]:
    """Write ``<prefix>.txt`` (one ``name value`` per line) and ``<prefix>.json``."""
    prefix = Path(prefix)
    prefix.parent.mkdir(parents=True, exist_ok=True)
    txt = prefix.with_name(prefix.name + ".txt")
    js = prefix.with_name(prefix.name + ".json")
    blocks = [f"sigma {s!r}\n{r.to_text()}" for s, r in reports]
    txt.write_text("\n".join(blocks))
    js.write_text(json.dumps([{"sigma": s, **r.to_dict()} for s, r in reports], indent=2,
                             default=lambda o: o.item() if hasattr(o, "item") else str(o)) + "\n")
    return txt, js
