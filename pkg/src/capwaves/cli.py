"""Command-line entry point: ``capwaves VERB --config FILE [--set section.key=value ...]``.

Exit status: 0 on success, 1 on invalid input (or a failed ``verify``
check), 2 when a run trips on a monitor or a numerical failure and
``--strict`` is given.
"""

import argparse
import math
import os
import sys

from .config import config_from_string, load_config
from .errors import CapwavesError, ConfigError, DegenerateSweepError, InvalidInputError, InvalidSweepError, OutOfRegimeError
from .records import fmt_float, write_records

EXIT_OK, EXIT_INVALID, EXIT_TRIP = 0, 1, 2


def _parser():
    ap = argparse.ArgumentParser(prog="capwaves", description="Water waves over large bathymetry with surface tension.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="configuration file (defaults used if omitted)")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override one configuration value; repeatable")
    common.add_argument("--out", metavar="DIR", help="output directory (overrides [output] directory)")
    common.add_argument("--strict", action="store_true", help="exit with status 2 when a run trips")
    common.add_argument("-q", "--quiet", action="store_true")
    sub = ap.add_subparsers(dest="verb", required=True)
    sub.add_parser("run", parents=[common], help="one simulation; writes a diagnostics JSONL file")
    sp = sub.add_parser("sweep", parents=[common], help="runs over the [sweep] parameter grid")
    sp.add_argument("--no-resume", action="store_true", help="ignore rows already in the output table")
    ep = sub.add_parser("existence-time", parents=[common], help="trip time versus eps and the exponent q")
    ep.add_argument("--eps", help="comma-separated eps values (default: [sweep] eps)")
    ep.add_argument("--no-resume", action="store_true")
    sub.add_parser("sw-limit", parents=[common], help="shallow-water convergence study over [swlimit] mu")
    vp = sub.add_parser("verify", parents=[common], help="DN operator and energy property checks")
    vp.add_argument("--nz", type=int, help="vertical nodes for the checks")
    return ap


def _load(args):
    if args.config:
        cfg = load_config(args.config, args.overrides)
    else:
        cfg = config_from_string("", args.overrides)
    outdir = args.out or cfg.resolve_path(cfg["output"]["directory"]) or "."
    os.makedirs(outdir, exist_ok=True)
    with open(os.path.join(outdir, cfg["output"]["echo"]), "w") as fh:
        cfg.dump(fh)
    return cfg, outdir


def _say(args, msg):
    if not args.quiet:
        print(msg)


def cmd_run(args, cfg, outdir):
    from .experiments import run_config
    path = os.path.join(outdir, cfg["output"]["records"])
    res = run_config(cfg)
    write_records(res.diagnostics, path, "jsonl")
    if res.trip_reason:
        _say(args, f"tripped: {res.trip_reason} at t = {fmt_float(res.trip_time)} {res.message}".rstrip())
    else:
        _say(args, f"completed to t = {res.final.t:.6g} in {res.steps} steps")
    _say(args, f"diagnostics: {path} ({len(res.diagnostics)} records)")
    return EXIT_TRIP if (args.strict and res.trip_reason) else EXIT_OK


def _report_rows(args, result):
    for r in result.rows:
        state = "censored" if r.censored else (r.trip_reason or r.status)
        _say(args, f"eps={r.eps:g} mu={r.mu:g} beta={r.beta:g} Bo*mu={r.bond_mu:g} gamma={r.gamma:g}: "
                   f"T={fmt_float(r.trip_time) or '-'} ({state})")


def _tripped(result):
    return any(r.status != "ok" or (not r.censored and r.trip_reason) for r in result.rows)


def cmd_sweep(args, cfg, outdir):
    from .experiments import sweep
    path = os.path.join(outdir, cfg["output"]["sweep"])
    if args.no_resume and os.path.exists(path):
        os.remove(path)
    res = sweep(cfg, path=path).sorted()
    write_records(res, path, "csv")
    _report_rows(args, res)
    _say(args, f"table: {path}")
    return EXIT_TRIP if (args.strict and _tripped(res)) else EXIT_OK


def cmd_existence(args, cfg, outdir):
    from .experiments import existence_time_proxy
    if args.eps:
        eps = [float(e) for e in args.eps.split(",")]
    else:
        eps = cfg["sweep"]["eps"]
        if eps is None:
            raise InvalidSweepError("give eps values with --eps or [sweep] eps")
    path = os.path.join(outdir, cfg["output"]["sweep"])
    if args.no_resume and os.path.exists(path):
        os.remove(path)
    res = existence_time_proxy(cfg, eps, path=path)
    write_records(res, path, "csv")
    _report_rows(args, res)
    f = res.fits
    if f.get("q") is not None:
        bounds = "" if math.isnan(f["q_lo"]) else f" [{f['q_lo']:.3f}, {f['q_hi']:.3f}] (95%)"
        _say(args, f"q = {f['q']:.3f}{bounds} from {f['n_used']} runs, T_cap = {f['T_cap']:g}, "
                   f"censored {'included' if f['censored_included'] else 'excluded'}")
    else:
        _say(args, "q not fitted: fewer than two usable trip times")
    if res.flags:
        _say(args, "flags: " + ", ".join(res.flags))
    return EXIT_TRIP if (args.strict and any(r.status != "ok" for r in res.rows)) else EXIT_OK


def cmd_swlimit(args, cfg, outdir):
    import csv
    from .swlimit import convergence_study
    sw = cfg["swlimit"]
    it = cfg["integrator"]
    study = convergence_study(cfg.initial(), cfg.bottom(), cfg.params, sw["mu"], cfg.grid, T=sw["T"],
                              dt=sw["dt"], nz=cfg["grid"]["nz"], check_every=sw["check_every"],
                              solver_tol=min(it["solver_tol"], 1e-12), integrator=it["scheme"])
    path = os.path.join(outdir, cfg["output"]["swlimit"])
    cols = ("mu", "error_zeta", "error_V", "error", "identity_max", "trip", "message")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for r in study.rows:
            w.writerow([fmt_float(r.mu), fmt_float(r.error_zeta), fmt_float(r.error_V), fmt_float(r.error),
                        fmt_float(r.identity_max), r.trip or "", r.message])
    for r in study.rows:
        _say(args, f"mu={r.mu:g}: error={r.error:.4e} identity={r.identity_max:.2e} {r.trip or ''}".rstrip())
    if study.order is not None:
        _say(args, f"fitted order in mu: {study.order:.3f}")
    _say(args, f"table: {path}")
    failed = any(r.trip for r in study.rows)
    return EXIT_TRIP if (args.strict and failed) else EXIT_OK


def cmd_verify(args, cfg, outdir):
    from .verify import verify_suite
    checks = verify_suite(cfg, nz=args.nz)
    for c in checks:
        _say(args, c.line())
    return EXIT_OK if all(c.passed for c in checks) else EXIT_INVALID


VERBS = {"run": cmd_run, "sweep": cmd_sweep, "existence-time": cmd_existence, "sw-limit": cmd_swlimit,
         "verify": cmd_verify}


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        cfg, outdir = _load(args)
        return VERBS[args.verb](args, cfg, outdir)
    except (ConfigError, OutOfRegimeError, InvalidInputError, InvalidSweepError, DegenerateSweepError,
            FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except CapwavesError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
