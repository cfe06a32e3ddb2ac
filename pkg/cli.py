# cli.py

import argparse
import contextlib
import json
import logging
import math
import sys
from dataclasses import replace
from typing import Dict, Iterator, List, Optional, Sequence, TextIO

import numpy as np
import pandas as pd

from clt_functionals import (
    GaussianLimit,
    global_limit,
    global_limit_identity,
    local_limit_bulk,
    local_limit_edge,
)
from config import (
    DEFAULT_A,
    DEFAULT_ALPHA,
    DEFAULT_B,
    DEFAULT_C,
    DEFAULT_T,
    DENSITY_POINTS,
    DESK_N,
    DESK_PHI,
    DESK_REPS,
    LOCAL_LOG_OFFSET,
    PAPER_N,
    PAPER_PHI,
    PAPER_REPS,
    THREADS_ENV,
    VERSION,
    default_threads,
    log_level,
)
from errors import CovTestError, DomainError
from lss_functions import TestFunctionSpec, global_function
from lss_statistics import StatParams, kinds_from_arg, load_matrix, run_test
from simulation import (
    AlternativeSpec,
    EnsembleConfig,
    EntryDistribution,
    ecdf_experiment,
    kappa4_of,
    power_experiment,
    roc_experiment,
)
from spectral_law import (
    PopulationSpectrum,
    asymptotic_edges,
    companion_transform,
    density,
    identity_edges,
    solve_m,
    support,
)

logger = logging.getLogger("covtest")

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


# ---------------- Argument parsing ----------------

class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        raise _UsageError(message)


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--output", default=None, help="Write the CSV/JSON result here instead of stdout.")
    p.add_argument("--log-level", dest="log_level", default=None, help="Logging level (default from COVTEST_LOG_LEVEL).")


def _add_spectrum(p: argparse.ArgumentParser, phi_default: Optional[float] = None) -> None:
    p.add_argument("--pi", default=None, help='Population spectrum "w1:v1,w2:v2,..." (default: identity).')
    p.add_argument("--phi", type=float, default=phi_default, required=phi_default is None, help="Aspect ratio p/n.")
    p.add_argument("--tau", type=float, default=1e-3, help="Atoms must lie in [tau, 1/tau].")


def _add_stat_params(p: argparse.ArgumentParser) -> None:
    p.add_argument("--c", type=float, default=DEFAULT_C, help="Shift c for the linear/quadratic statistics.")
    p.add_argument("--t", type=float, default=DEFAULT_T, help="t > 1 for the log statistic (c = t + 1/t).")
    p.add_argument("--eta0", type=float, default=None, help="Local scale (default n^{-1/4}).")
    p.add_argument("--a", type=float, default=DEFAULT_A, help="Mollifier ramp width.")
    p.add_argument("--b", type=float, default=DEFAULT_B, help="Mollifier plateau half-width.")
    p.add_argument("--log-offset", dest="log_offset", type=float, default=LOCAL_LOG_OFFSET)
    p.add_argument("--literal", action="store_true", help="Use the legacy closed-form T3/T4 global constants.")


def _add_ensemble(p: argparse.ArgumentParser) -> None:
    p.add_argument("--stat", default="t1g", help="Comma-separated statistics, or all/global/local.")
    p.add_argument("--n", type=int, default=None, help=f"Samples (default {DESK_N}).")
    p.add_argument("--phi", type=float, default=None, help=f"Aspect ratio (default {DESK_PHI:g}).")
    p.add_argument("--reps", type=int, default=None, help=f"Replicates (default {DESK_REPS}).")
    p.add_argument("--seed", type=int, default=0, help="Master seed (unsigned 64-bit).")
    p.add_argument("--dist", default="gaussian", help="gaussian | twopoint_neg | twopoint_pos | twopoint:<p>.")
    p.add_argument("--kappa4", type=float, default=0.0, help="kappa4 used to standardize global statistics.")
    p.add_argument("--threads", type=int, default=None, help=f"Worker processes (default ${THREADS_ENV} or all CPUs).")
    p.add_argument("--paper-scale", dest="paper_scale", action="store_true", help=f"n={PAPER_N}, phi={PAPER_PHI:g}, reps={PAPER_REPS}.")
    p.add_argument("--record", action="store_true", help="Save the experiment to the runs ledger.")
    _add_stat_params(p)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="covtest", description="Spectral law, LSS limits and covariance tests for p >> n.")
    parser.add_argument("--version", action="version", version=f"covtest {VERSION}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("law-edges", help="Support edges of the limiting law.")
    _add_spectrum(p)
    p.add_argument("--asymptotic", type=int, nargs="?", const=0, default=None, choices=[0, 1, 2],
                   help="Large-phi expansion of the given order instead of the exact edges.")
    _add_common(p)

    p = sub.add_parser("law-density", help="Density grid as CSV (x,rho).")
    _add_spectrum(p)
    p.add_argument("--points", type=int, default=DENSITY_POINTS)
    _add_common(p)

    p = sub.add_parser("law-m", help="Stieltjes transform and derivatives at z.")
    _add_spectrum(p)
    p.add_argument("--re", type=float, required=True)
    p.add_argument("--im", type=float, required=True)
    _add_common(p)

    p = sub.add_parser("limit-global", help="Global Gaussian limit of LSS.")
    _add_spectrum(p)
    p.add_argument("--base", default="linear", help="Comma-separated linear, quadratic, log, logshift.")
    p.add_argument("--kappa4", type=float, default=0.0)
    p.add_argument("--c", type=float, default=DEFAULT_C)
    p.add_argument("--t", type=float, default=DEFAULT_T)
    p.add_argument("--route", choices=["auto", "closed", "contour", "general"], default="auto")
    _add_common(p)

    p = sub.add_parser("limit-local", help="Local (bulk or edge) Gaussian limit of mollified bases.")
    p.add_argument("--base", default="linear", help="Comma-separated linear, quadratic, logshift.")
    p.add_argument("--side", choices=["bulk", "left", "right"], default="right")
    p.add_argument("--a", type=float, default=DEFAULT_A)
    p.add_argument("--b", type=float, default=DEFAULT_B)
    p.add_argument("--log-offset", dest="log_offset", type=float, default=LOCAL_LOG_OFFSET)
    _add_common(p)

    p = sub.add_parser("test", help="Run the covariance tests on a CSV data matrix.")
    p.add_argument("--input", required=True, help="CSV matrix, comma separated.")
    p.add_argument("--rows", choices=["vars", "samples"], default="vars")
    p.add_argument("--header", action="store_true", help="Skip one header line.")
    p.add_argument("--unit-variance", dest="unit_variance", action="store_true",
                   help="Entries have variance 1; rescale by (pn)^{-1/4}.")
    p.add_argument("--stat", default="all")
    p.add_argument("--kappa4", type=float, default=0.0)
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    _add_stat_params(p)
    _add_common(p)

    p = sub.add_parser("simulate-ecdf", help="Null ECDF calibration of standardized statistics.")
    _add_ensemble(p)
    p.add_argument("--compare-dist", dest="compare_dist", default=None, help="Second entry law for two-sample KS.")
    _add_common(p)

    p = sub.add_parser("simulate-power", help="Rejection rates over an alternative sweep.")
    _add_ensemble(p)
    p.add_argument("--alt", choices=["cluster", "spiked"], default="cluster")
    p.add_argument("--eps", default="0,0.05,0.1,0.2,0.3", help="Comma-separated epsilons.")
    p.add_argument("--weight", type=float, default=0.5, help="Cluster weight a.")
    p.add_argument("--spikes", type=int, default=1, help="Spike count r.")
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    _add_common(p)

    p = sub.add_parser("simulate-roc", help="ROC/AUC of |z| between null and alternative.")
    _add_ensemble(p)
    p.add_argument("--alt", choices=["cluster", "spiked"], default="cluster")
    p.add_argument("--eps", type=float, default=0.3)
    p.add_argument("--weight", type=float, default=0.5)
    p.add_argument("--spikes", type=int, default=1)
    _add_common(p)
    return parser


# ---------------- Output helpers ----------------

def _header(args: argparse.Namespace) -> Dict:
    flags = {k: v for k, v in sorted(vars(args).items()) if k != "func"}
    return {"program": "covtest", "version": VERSION, "flags": flags, "seed": flags.get("seed")}


@contextlib.contextmanager
def _sink(path: Optional[str]) -> Iterator[TextIO]:
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh
    else:
        yield sys.stdout


def _write_json(obj: object, path: Optional[str]) -> None:
    with _sink(path) as fh:
        fh.write(json.dumps(_json_safe(obj), indent=2, default=_json_default, allow_nan=False))
        fh.write("\n")


def _write_csv(frame: pd.DataFrame, header: Dict, path: Optional[str]) -> None:
    with _sink(path) as fh:
        fh.write("# " + json.dumps(_json_safe(header), sort_keys=True, default=_json_default, allow_nan=False) + "\n")
        frame.to_csv(fh, index=False, float_format="%.17g")


def _json_safe(v: object) -> object:
    """Non-finite floats become null; JSON has no Infinity."""
    if isinstance(v, dict):
        return {k: _json_safe(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_safe(x) for x in v]
    if isinstance(v, np.ndarray):
        return _json_safe(v.tolist())
    if isinstance(v, (float, np.floating)):
        return float(v) if math.isfinite(v) else None
    return v


def _json_default(v: object) -> object:
    if isinstance(v, complex):
        return {"re": v.real, "im": v.imag}
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    return str(v)


def _complex(v: complex) -> Dict[str, float]:
    return {"re": float(v.real), "im": float(v.imag)}


def _spectrum(args: argparse.Namespace) -> PopulationSpectrum:
    if args.pi:
        return PopulationSpectrum.parse(args.pi, args.phi, tau=args.tau)
    return PopulationSpectrum.identity(args.phi)


def _stat_params(args: argparse.Namespace) -> StatParams:
    return StatParams(
        c=args.c, t=args.t, eta0=args.eta0, a=args.a, b=args.b, log_offset=args.log_offset, literal=args.literal
    )


def _record(kind: str, params: Dict, summary: object, rows: Optional[pd.DataFrame]) -> str:
    from db import find_runs_by_params, save_run

    earlier = find_runs_by_params(params)
    if earlier:
        logger.info("same parameters already recorded as %s", ", ".join(earlier[:3]))
    run_id = save_run(kind, params, summary, rows)
    logger.info("recorded run %s", run_id)
    return run_id


# ---------------- Commands ----------------

def cmd_law_edges(args: argparse.Namespace) -> None:
    spec = _spectrum(args)
    if args.asymptotic is not None:
        lo, hi = asymptotic_edges(spec, order=args.asymptotic)
        out = {"gamma_minus": lo, "gamma_plus": hi, "asymptotic_order": args.asymptotic}
    else:
        sup = support(spec)
        lo, hi = identity_edges(spec.phi) if spec.is_identity else asymptotic_edges(spec, order=0)
        out = {
            "gamma_minus": sup.gamma_minus,
            "gamma_plus": sup.gamma_plus,
            "x1": sup.x1,
            "x2": sup.x2,
            "closed_form_gamma_minus": lo,
            "closed_form_gamma_plus": hi,
        }
    _write_json(out, args.output)


def cmd_law_density(args: argparse.Namespace) -> None:
    grid = density(_spectrum(args), n_points=args.points)
    header = _header(args)
    header["total_mass"] = grid.total_mass
    header["flagged"] = int(np.sum(grid.flags))
    _write_csv(grid.to_frame(), header, args.output)


def cmd_law_m(args: argparse.Namespace) -> None:
    spec = _spectrum(args)
    z = complex(args.re, args.im)
    v = solve_m(z, spec)
    out = {
        "z": _complex(v.z),
        "m": _complex(v.m),
        "m1": _complex(v.m1),
        "m2": _complex(v.m2),
        "residual": v.residual,
        "m_p": _complex(companion_transform(z, spec)),
    }
    _write_json(out, args.output)


def cmd_limit_global(args: argparse.Namespace) -> None:
    spec = _spectrum(args)
    bases = [b.strip() for b in args.base.split(",") if b.strip()]
    if spec.is_identity and args.route != "general":
        lim = global_limit_identity(bases, args.kappa4, c=args.c, t=args.t, phi=spec.phi, route=args.route)
    else:
        sup = support(spec)
        tfs = []
        for base in bases:
            tf = global_function(base, spec.phi, c=args.c, t=args.t, support_edges=(sup.gamma_minus, sup.gamma_plus))
            tfs.append(tf)
        lim = global_limit(tfs, spec, args.kappa4, sup=sup)
    _write_json(lim.to_dict(), args.output)


def cmd_limit_local(args: argparse.Namespace) -> None:
    tfs = []
    for base in [b.strip() for b in args.base.split(",") if b.strip()]:
        c = args.b + args.a + args.log_offset if base in ("log", "logshift") else DEFAULT_C
        tfs.append(TestFunctionSpec(base=base, c=c, center=0.0, eta0=1.0, a=args.a, b=args.b))
    if args.side == "bulk":
        lim: GaussianLimit = local_limit_bulk(tfs)
    else:
        lim = local_limit_edge(tfs, side=args.side)
    _write_json(lim.to_dict(), args.output)


def cmd_test(args: argparse.Namespace) -> None:
    X = load_matrix(args.input, rows=args.rows, header=args.header)
    if args.unit_variance:
        p, n = X.shape
        X = X * (p * n) ** -0.25
    kinds = kinds_from_arg(args.stat)
    reports = run_test(X, kinds, kappa4=args.kappa4, params=_stat_params(args), alpha=args.alpha)
    _write_json([r.to_dict() for r in reports], args.output)


def _ensemble(args: argparse.Namespace, dist: Optional[str] = None) -> EnsembleConfig:
    n0, phi0, reps0 = (PAPER_N, PAPER_PHI, PAPER_REPS) if args.paper_scale else (DESK_N, DESK_PHI, DESK_REPS)
    return EnsembleConfig(
        n=args.n if args.n is not None else n0,
        phi=args.phi if args.phi is not None else phi0,
        dist=EntryDistribution.from_tag(dist or args.dist),
        seed=args.seed,
        reps=args.reps if args.reps is not None else reps0,
        threads=args.threads or default_threads(),
    )


def _emit_experiment(args: argparse.Namespace, kind: str, frame: pd.DataFrame, summary: List[Dict], cfg: EnsembleConfig) -> None:
    header = _header(args)
    if args.output:
        _write_csv(frame, header, args.output)
        _write_json(summary, None)
    else:
        _write_json(summary, None)
    if args.record:
        params = dict(cfg.describe())
        params["flags"] = header["flags"]
        _record(kind, params, summary, frame)


def cmd_simulate_ecdf(args: argparse.Namespace) -> None:
    cfg = _ensemble(args)
    compare = EntryDistribution.from_tag(args.compare_dist) if args.compare_dist else None
    res = ecdf_experiment(cfg, kinds_from_arg(args.stat), _stat_params(args), kappa4=args.kappa4, compare=compare)
    summary = res.summary()
    for row in summary:
        row["kappa4_true"] = kappa4_of(cfg.dist)
    _emit_experiment(args, "ecdf", res.to_frame(), summary, cfg)


def cmd_simulate_power(args: argparse.Namespace) -> None:
    cfg = _ensemble(args)
    try:
        eps = [float(e) for e in args.eps.split(",") if e.strip()]
    except ValueError:
        raise DomainError(f"bad epsilon list {args.eps!r}") from None
    alt = AlternativeSpec(kind=args.alt, a=args.weight, r=args.spikes)
    res = power_experiment(cfg, eps, kinds_from_arg(args.stat), alt, alpha=args.alpha, params=_stat_params(args), kappa4=args.kappa4)
    _emit_experiment(args, "power", res.to_frame(), res.summary(), cfg)


def cmd_simulate_roc(args: argparse.Namespace) -> None:
    null_cfg = _ensemble(args)
    alt = AlternativeSpec(kind=args.alt, epsilon=args.eps, a=args.weight, r=args.spikes)
    alt.validate()
    alt_cfg = replace(null_cfg, alternative=alt, stream=null_cfg.stream + 1)
    res = roc_experiment(null_cfg, alt_cfg, kinds_from_arg(args.stat), _stat_params(args), kappa4=args.kappa4)
    _emit_experiment(args, "roc", res.to_frame(), res.summary(), null_cfg)


COMMANDS = {
    "law-edges": cmd_law_edges,
    "law-density": cmd_law_density,
    "law-m": cmd_law_m,
    "limit-global": cmd_limit_global,
    "limit-local": cmd_limit_local,
    "test": cmd_test,
    "simulate-ecdf": cmd_simulate_ecdf,
    "simulate-power": cmd_simulate_power,
    "simulate-roc": cmd_simulate_roc,
}


# ---------------- Entry point ----------------

def _configure_logging(level: Optional[str]) -> None:
    name = (level or log_level()).upper()
    logging.basicConfig(
        level=getattr(logging, name, logging.WARNING),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv) if argv is not None else None)
    except _UsageError as exc:
        sys.stderr.write(json.dumps({"error": "usage", "message": str(exc)}) + "\n")
        return EXIT_USAGE
    except SystemExit as exc:
        # --help / --version
        return int(exc.code or 0)
    if not args.command:
        parser.print_help(sys.stderr)
        return EXIT_USAGE

    _configure_logging(getattr(args, "log_level", None))
    sys.stderr.write(json.dumps(_json_safe(_header(args)), sort_keys=True, default=_json_default) + "\n")
    try:
        COMMANDS[args.command](args)
    except CovTestError as exc:
        logger.debug("command failed", exc_info=True)
        sys.stderr.write(json.dumps(_json_safe(exc.to_dict()), default=_json_default) + "\n")
        return EXIT_FAILURE
    except OSError as exc:
        sys.stderr.write(json.dumps({"error": "io_error", "message": str(exc)}) + "\n")
        return EXIT_FAILURE
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
