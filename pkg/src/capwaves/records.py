"""Persistence: diagnostics as JSON lines, sweep tables as CSV.

Floats are written with 17 significant digits so a write/read round trip is
bit-exact.  Non-finite values are written as the strings ``"nan"``,
``"inf"`` and ``"-inf"``.
"""

import csv
import json
import math
from dataclasses import dataclass, field

from .energy import DiagnosticsRecord

# fixed field order of a diagnostics line
DIAG_FIELDS = ("time", "energy_EN", "min_h", "min_a", "mass", "hamiltonian", "E", "F", "flags")

SWEEP_FIELDS = ("eps", "mu", "beta", "bond_mu", "gamma", "trip_time", "trip_reason", "censored",
                "final_energy", "status", "message")


@dataclass
class SweepRow:
    eps: float
    mu: float
    beta: float
    bond_mu: float
    gamma: float
    trip_time: float | None
    trip_reason: str | None
    censored: bool
    final_energy: float | None
    status: str = "ok"
    message: str = ""

    @property
    def key(self):
        return (self.eps, self.mu, self.beta, self.bond_mu, self.gamma)


@dataclass
class SweepResult:
    rows: list
    fits: dict = field(default_factory=dict)
    flags: list = field(default_factory=list)

    def sorted(self):
        return SweepResult(sorted(self.rows, key=lambda r: r.key), dict(self.fits), list(self.flags))


def fmt_float(v):
    if v is None:
        return ""
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(v, ".17g")


def _parse_float(s):
    return None if s in ("", None) else float(s)


def _json_float(v):
    # a raw token so the text keeps its 17 digits
    return "null" if v is None else (fmt_float(v) if math.isfinite(v) else json.dumps(fmt_float(v)))


def _json_map(d):
    return "{" + ", ".join(f'"{k}": {_json_float(v)}' for k, v in sorted(d.items())) + "}"


def diagnostics_line(rec):
    parts = [
        f'"time": {_json_float(rec.time)}',
        f'"energy_EN": {_json_float(rec.energy_EN)}',
        f'"min_h": {_json_float(rec.min_h)}',
        f'"min_a": {_json_float(rec.min_a)}',
        f'"mass": {_json_float(rec.mass)}',
        f'"hamiltonian": {_json_float(rec.hamiltonian)}',
        f'"E": {_json_map(rec.E)}',
        f'"F": {_json_map(rec.F)}',
        f'"flags": {json.dumps(list(rec.flags))}',
    ]
    return "{" + ", ".join(parts) + "}"


def _from_json(v):
    if isinstance(v, str):
        return float(v)
    return v if v is None else float(v)


def parse_diagnostics_line(line):
    obj = json.loads(line)
    missing = [k for k in DIAG_FIELDS if k not in obj]
    if missing:
        raise ValueError("diagnostics line is missing " + ", ".join(missing))
    return DiagnosticsRecord(
        time=_from_json(obj["time"]),
        energy_EN=_from_json(obj["energy_EN"]),
        E={int(k): _from_json(v) for k, v in obj["E"].items()},
        F={int(k): _from_json(v) for k, v in obj["F"].items()},
        min_h=_from_json(obj["min_h"]),
        min_a=_from_json(obj["min_a"]),
        mass=_from_json(obj["mass"]),
        hamiltonian=_from_json(obj["hamiltonian"]),
        flags=list(obj["flags"]),
    )


def _open(path, mode):
    try:
        return open(path, mode, newline="" if path.endswith(".csv") else None)
    except OSError as exc:
        raise OSError(f"cannot open {path} for {'writing' if 'w' in mode or 'a' in mode else 'reading'}: "
                      f"{exc.strerror}") from exc


def write_records(stream, path, format=None):
    """Write diagnostics (``jsonl``) or sweep rows (``csv``) to ``path``.

    ``format`` defaults from the extension.
    """
    fmt = format or ("csv" if str(path).endswith(".csv") else "jsonl")
    if fmt == "jsonl":
        with _open(path, "w") as fh:
            for rec in stream:
                fh.write(diagnostics_line(rec) + "\n")
    elif fmt == "csv":
        rows = stream.rows if isinstance(stream, SweepResult) else list(stream)
        with _open(path, "w") as fh:
            w = csv.writer(fh)
            w.writerow(SWEEP_FIELDS)
            for r in rows:
                w.writerow(_sweep_cells(r))
    else:
        raise ValueError(f"unknown record format {fmt!r}")


def _sweep_cells(r):
    return [fmt_float(r.eps), fmt_float(r.mu), fmt_float(r.beta), fmt_float(r.bond_mu), fmt_float(r.gamma),
            fmt_float(r.trip_time), r.trip_reason or "", "1" if r.censored else "0",
            fmt_float(r.final_energy), r.status, r.message]


def append_sweep_row(path, row):
    """Append one row, writing the header first if the file is new/empty."""
    import os
    new = not os.path.exists(path) or os.path.getsize(path) == 0
    with _open(path, "a") as fh:
        w = csv.writer(fh)
        if new:
            w.writerow(SWEEP_FIELDS)
        w.writerow(_sweep_cells(row))
        fh.flush()


def read_diagnostics(path):
    with _open(path, "r") as fh:
        return [parse_diagnostics_line(line) for line in fh if line.strip()]


def read_sweep(path):
    with _open(path, "r") as fh:
        rd = csv.reader(fh)
        header = next(rd, None)
        if header is None:
            return SweepResult([])
        if tuple(header) != SWEEP_FIELDS:
            raise ValueError(f"{path}: unexpected sweep header {header}")
        rows = []
        for cells in rd:
            if len(cells) != len(SWEEP_FIELDS):
                continue  # a half-written last line from an interrupted run
            c = dict(zip(SWEEP_FIELDS, cells))
            rows.append(SweepRow(
                float(c["eps"]), float(c["mu"]), float(c["beta"]), float(c["bond_mu"]), float(c["gamma"]),
                _parse_float(c["trip_time"]), c["trip_reason"] or None, c["censored"] == "1",
                _parse_float(c["final_energy"]), c["status"], c["message"]))
        return SweepResult(rows)


def read_records(path):
    """Bundled reader: dispatches on the extension."""
    return read_sweep(path) if str(path).endswith(".csv") else read_diagnostics(path)
