"""Experiment drivers: single runs, parameter sweeps and the existence-time proxy."""

import itertools
import math
import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np
from scipy import stats

from .config import RunConfig, build_config
from .errors import CapwavesError, DegenerateSweepError, InvalidSweepError
from .evolution import run_simulation
from .records import SweepResult, SweepRow, append_sweep_row, read_sweep


def run_config(config: RunConfig, T_end=None, on_record=None, monitors=None):
    """One simulation as described by ``config``."""
    it = config["integrator"]
    mon = config["monitors"]
    out = config["output"]
    model = config.model()
    return run_simulation(
        config.initial(), model.b, config.params, T_end=it["T_end"] if T_end is None else T_end,
        dt=it["dt"], model=model, monitors=mon["enabled"] if monitors is None else monitors,
        output_interval=out["interval"], N_d=mon["N_d"], h_min=mon["h_min"], a0=mon["a0"],
        energy_ratio=mon["energy_factor"], on_record=on_record, adaptive=it["adaptive"],
        rtol=it["rtol"], dt_min=it["dt_min"], energies=out["energies"],
        monitor_interval=mon["interval"])


def _bond_mu(params):
    return params.bond * params.mu if math.isfinite(params.bond) else math.inf


def _row(raw, source, key, T_cap):
    """Worker body: run one parameter tuple and summarise it as a row."""
    eps, mu, beta, bond_mu, gamma = key
    bond = bond_mu / mu if math.isfinite(bond_mu) else math.inf
    try:
        cfg = build_config(raw, source).with_params(eps=eps, mu=mu, beta=beta, bond=bond, gamma=gamma)
        res = run_config(cfg, T_end=T_cap)
    except (CapwavesError, ValueError, FloatingPointError) as exc:
        return SweepRow(*key, None, None, False, None, "failed", f"{type(exc).__name__}: {exc}")
    final = None
    if res.diagnostics:
        final = res.diagnostics[-1].energy_EN
    if res.trip_reason is None:
        return SweepRow(*key, T_cap, None, True, final, "ok", "")
    return SweepRow(*key, res.trip_time, res.trip_reason, False, final, "ok", res.message)


def parameter_grid(config, **axes):
    """Cartesian product of the sweep axes, sorted; unset axes take the config value."""
    p = config.params
    sw = config["sweep"]
    base = {"eps": [p.eps], "mu": [p.mu], "beta": [p.beta], "bond_mu": [_bond_mu(p)], "gamma": [p.gamma]}
    for name in base:
        vals = axes.get(name)
        if vals is None:
            vals = sw.get(name)
        if vals is not None:
            base[name] = [float(v) for v in vals]
    for name, vals in base.items():
        if not vals:
            raise InvalidSweepError(f"sweep axis {name} is empty")
        if not all(math.isfinite(v) or (name == "bond_mu" and v == math.inf) for v in vals):
            raise InvalidSweepError(f"sweep axis {name} has non-finite values")
    return sorted(set(itertools.product(base["eps"], base["mu"], base["beta"], base["bond_mu"], base["gamma"])))


def sweep(config, keys=None, T_cap=None, workers=None, path=None, resume=True, progress=None, **axes):
    """Run every parameter tuple; rows come back sorted by tuple.

    With ``path`` each finished row is appended to that CSV file, and rows
    already present there are skipped on a resumed call.
    """
    keys = sorted(set(keys)) if keys is not None else parameter_grid(config, **axes)
    T = T_cap if T_cap is not None else (config["sweep"]["T_cap"] or config["integrator"]["T_end"])
    workers = workers or config["sweep"]["workers"] or 1
    done = {}
    if path is not None and resume and os.path.exists(path):
        done = {r.key: r for r in read_sweep(path).rows}
    todo = [k for k in keys if k not in done]
    T_of = T if callable(T) else (lambda k: T)
    args = [(config.raw, config.source, k, T_of(k)) for k in todo]
    results = dict(done)

    def collect(row):
        results[row.key] = row
        if path is not None:
            append_sweep_row(path, row)
        if progress:
            progress(row)

    if workers > 1 and len(args) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            for row in ex.map(_row, *zip(*args)):
                collect(row)
    else:
        for a in args:
            collect(_row(*a))
    return SweepResult([results[k] for k in keys])


def fit_power_law(x, y, confidence=0.95):
    """Fit ``y = C x^p`` in log-log; returns ``(p, lo, hi, C)``.

    The bounds are Student-t intervals on the slope; with two points they
    are nan.
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if len(x) < 2 or np.ptp(np.log(x)) == 0:
        raise DegenerateSweepError("need at least two distinct abscissae")
    if np.any(y <= 0):
        raise DegenerateSweepError("power-law fit needs positive values")
    lx, ly = np.log(x), np.log(y)
    res = stats.linregress(lx, ly)
    if len(x) > 2:
        half = stats.t.ppf(0.5 + confidence / 2, len(x) - 2) * res.stderr
    else:
        half = math.nan
    return res.slope, res.slope - half, res.slope + half, math.exp(res.intercept)


def existence_time_proxy(config, eps_list, T_cap=None, include_censored=None, workers=None,
                         path=None, progress=None):
    """Trip time against ``eps`` and the exponent ``q`` in ``T_trip ~ C eps^-q``.

    Runs that reach ``T_cap`` (default ``10/min(eps)``) are flagged
    censored; they enter the fit at ``T_cap`` only when ``include_censored``
    (config ``[sweep] censored = include``), which then gives a lower
    bound on ``q`` when the censored runs are the small-``eps`` ones.
    """
    eps_list = sorted({float(e) for e in eps_list})
    if len(eps_list) < 3:
        raise InvalidSweepError("an existence-time sweep needs at least 3 values of eps")
    if any(not 0 < e <= 1 for e in eps_list):
        raise InvalidSweepError("eps values must lie in (0, 1]")
    T = T_cap if T_cap is not None else (config["sweep"]["T_cap"] or 10.0 / min(eps_list))
    if include_censored is None:
        include_censored = config["sweep"]["censored"] == "include"
    res = sweep(config, T_cap=T, workers=workers, path=path, progress=progress, eps=eps_list)
    rows = res.rows
    ok = [r for r in rows if r.status == "ok"]
    if all(r.status != "ok" or (not r.censored and r.trip_time == 0.0) for r in rows):
        first = rows[0].message if rows and not ok else ""
        raise DegenerateSweepError("no run got past t = 0; the initial data violate the monitors"
                                   + (f" ({first})" if first else ""))
    flags = []
    if len(ok) < len(rows):
        flags.append("partial")
    if any(r.censored for r in ok):
        flags.append("censored")
    used = [r for r in ok if (include_censored or not r.censored) and r.trip_time and r.trip_time > 0]
    fits = {"T_cap": T, "censored_included": bool(include_censored), "n_used": len(used)}
    if len({r.eps for r in used}) >= 2:
        slope, lo, hi, C = fit_power_law([r.eps for r in used], [r.trip_time for r in used])
        fits.update(q=-slope, q_lo=-hi, q_hi=-lo, C=C)
    else:
        fits.update(q=None, q_lo=None, q_hi=None, C=None)
        flags.append("insufficient-trips")
    return SweepResult(rows, fits, flags)


__all__ = ["run_config", "parameter_grid", "sweep", "fit_power_law", "existence_time_proxy"]
