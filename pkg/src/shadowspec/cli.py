"""Command line entry point ``shadowspec``.

Exit status is 0 on success, 1 on usage or configuration errors and 2 when
a computation's preconditions fail (including bound reports marked invalid).
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import BoundCase
from .corrfuncs import CorrelationModel, upd_delta
from .errors import (
    ConfigError,
    DegenerateConfigurationError,
    IllConditionedCovarianceError,
    InsufficientReplicationsError,
    ParameterDomainError,
    UnsupportedModelError,
)
from .harness import (
    _build_placement,
    _is_random,
    load_config,
    read_records,
    run_bounds,
    run_experiment,
    write_bound_reports,
    write_result,
)
from .metrics import count_stats, ospa, pp_points
from .spectrum import mean_measure_det, mean_measure_limit, mean_measure_poisson_disc

EXIT_OK, EXIT_USAGE, EXIT_INVALID = 0, 1, 2

_PRECONDITION_ERRORS = (
    ParameterDomainError,
    UnsupportedModelError,
    DegenerateConfigurationError,
    IllConditionedCovarianceError,
    InsufficientReplicationsError,
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    """Raise instead of exiting so :func:`main` controls the status code."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _sweep(text: str) -> tuple:
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected a:b:n")
    try:
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError:
        raise argparse.ArgumentTypeError("expected a:b:n with numbers") from None
    if n < 1 or not (a > 0 and b > 0):
        raise argparse.ArgumentTypeError("need positive sigmas and n >= 1")
    return tuple(float(v) for v in np.linspace(a, b, n))


def _positive(text: str) -> float:
    try:
        val = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not val > 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return val


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="override the configured seed")
    common.add_argument("--workers", type=int, default=None, help="worker processes")
    common.add_argument("--out", default=None, help="output path or prefix")

    p = _Parser(prog="shadowspec", description="Signal spectra of wireless networks with correlated shadowing.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("simulate", parents=[common], help="run Monte Carlo replications")
    s.add_argument("config")
    s.add_argument("--n-reps", type=int, default=None)

    b = sub.add_parser("bounds", parents=[common], help="evaluate approximation bounds")
    b.add_argument("config")
    b.add_argument("--case", choices=[c.value for c in BoundCase], default=None)
    b.add_argument("--sigma-sweep", type=_sweep, default=None, metavar="A:B:N")

    u = sub.add_parser("upd", parents=[common], help="print the eigenvalue floor delta(eps)")
    u.add_argument("--model", required=True)
    u.add_argument("--scale", type=_positive, default=1.0)
    u.add_argument("--smoothness", type=_positive, default=0.5)
    u.add_argument("--eps", type=_positive, required=True)

    o = sub.add_parser("ospa", parents=[common], help="OSPA distance between two spectra on [0, t]")
    o.add_argument("file1")
    o.add_argument("file2")
    o.add_argument("--t", type=_positive, required=True)

    pp = sub.add_parser("ppdata", parents=[common], help="P-P pairs of counts against a Poisson law")
    pp.add_argument("records")
    pp.add_argument("--t", type=_positive, required=True)
    pp.add_argument("--mean", type=_positive, default=None, help="Poisson mean (default: sample mean)")

    m = sub.add_parser("meanmeasure", parents=[common], help="print mean measures at t")
    m.add_argument("config")
    m.add_argument("--t", type=_positive, required=True)
    return p


def _with_overrides(cfg, args):
    kw = {}
    if args.seed is not None:
        kw["seed"] = args.seed
    if args.workers is not None:
        if args.workers < 1:
            raise UsageError("--workers must be at least 1")
        kw["workers"] = args.workers
    if args.out is not None:
        kw["out"] = args.out
    if getattr(args, "n_reps", None) is not None:
        if args.n_reps < 1:
            raise UsageError("--n-reps must be at least 1")
        kw["n_reps"] = args.n_reps
    return replace(cfg, **kw) if kw else cfg


def _cmd_simulate(args) -> int:
    cfg = _with_overrides(load_config(args.config), args)
    result = run_experiment(cfg)
    csv_path, json_path = write_result(result)
    for t in cfg.thresholds:
        cs = result.stats[t]
        mu = result.mean_measure[t]
        if cs is None:
            print(f"t={t!r} M={mu:.6g} (statistics need at least two replications)")
        else:
            print(f"t={t!r} M={mu:.6g} mean={cs.mean:.6g} variance={cs.variance:.6g}")
    print(f"wrote {csv_path} and {json_path}")
    return EXIT_OK


def _cmd_bounds(args) -> int:
    cfg = _with_overrides(load_config(args.config), args)
    reports = run_bounds(cfg, case=args.case, sigmas=args.sigma_sweep, seed=args.seed)
    for sigma, rep in reports:
        print(f"sigma {sigma!r}")
        print(rep.to_text())
    prefix = Path(cfg.out + "_bounds" if args.out is None else args.out)
    txt, js = write_bound_reports(reports, prefix)
    print(f"wrote {txt} and {js}")
    if len(reports) == 1:
        return EXIT_OK if reports[0][1].valid else EXIT_INVALID
    # a sweep succeeds when at least one point is valid
    return EXIT_OK if any(r.valid for _, r in reports) else EXIT_INVALID


def _cmd_upd(args) -> int:
    model = CorrelationModel(args.model, args.scale, args.smoothness)
    print(repr(upd_delta(model, args.eps)))
    return EXIT_OK


def _read_spectrum(path, t: float) -> np.ndarray:
    vals = np.loadtxt(path, comments="#", ndmin=1, dtype=float).ravel()
    if np.any(vals < 0) or not np.all(np.isfinite(vals)):
        raise ParameterDomainError(f"{path}: spectrum values must be finite and non-negative")
    return vals[vals <= t]


def _cmd_ospa(args) -> int:
    a = _read_spectrum(args.file1, args.t)
    b = _read_spectrum(args.file2, args.t)
    print(repr(ospa(a, b)))
    return EXIT_OK


def _cmd_ppdata(args) -> int:
    records = read_records(args.records)
    match = [t for t in records if math.isclose(t, args.t, rel_tol=1e-12)]
    if not match:
        known = ", ".join(repr(t) for t in sorted(records))
        raise UsageError(f"threshold {args.t!r} not in {args.records} (have {known})")
    cs = count_stats(records[match[0]], (match[0],))
    mean = args.mean if args.mean is not None else cs.mean
    pts = pp_points(cs, mean)
    lines = ["k,ecdf,pcdf"] + [f"{k},{e!r},{p!r}" for k, (e, p) in zip(cs.support(), pts)]
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_meanmeasure(args) -> int:
    cfg = load_config(args.config)
    params = cfg.params()
    print(f"L {mean_measure_limit(params, args.t)!r}")
    if _is_random(cfg):
        print(f"M_disc {mean_measure_poisson_disc(params, cfg.placement.C, args.t)!r}")
    else:
        print(f"M_det {mean_measure_det(params, _build_placement(cfg, None), args.t)!r}")
    return EXIT_OK


_COMMANDS = {
    "simulate": _cmd_simulate,
    "bounds": _cmd_bounds,
    "upd": _cmd_upd,
    "ospa": _cmd_ospa,
    "ppdata": _cmd_ppdata,
    "meanmeasure": _cmd_meanmeasure,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (FileNotFoundError, ConfigError) as exc:
        fields = getattr(exc, "fields", ())
        suffix = f" [fields: {', '.join(fields)}]" if fields else ""
        print(f"shadowspec: error: {exc}{suffix}", file=sys.stderr)
        return EXIT_USAGE
    except _PRECONDITION_ERRORS as exc:
        print(f"shadowspec: precondition failed: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
