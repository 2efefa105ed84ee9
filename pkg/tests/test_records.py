import json
import math

import numpy as np
import pytest

from capwaves.energy import DiagnosticsRecord
from capwaves.records import (DIAG_FIELDS, SWEEP_FIELDS, SweepResult, SweepRow, append_sweep_row, diagnostics_line,
                              read_diagnostics, read_records, read_sweep, write_records)


def _rec(t, rng):
    return DiagnosticsRecord(time=t, energy_EN=rng.random() * 1e3, E={0: rng.random(), 1: rng.random() / 3},
                             F={0: -rng.random() * 1e-17, 1: math.nan}, min_h=0.1 + rng.random(),
                             min_a=math.inf, mass=rng.standard_normal() * 1e-15, hamiltonian=1 / 3 + t,
                             flags=["energy-growth"] if t > 1 else [])


def _row(eps, censored=False):
    return SweepRow(eps, 0.1, 1.0, math.inf, 1.0, None if censored else 1 / eps / 3, None if censored else "min_h",
                    censored, 2 / 3, "ok", "water height, below floor")


def test_empty_streams(tmp_path):
    p = tmp_path / "d.jsonl"
    write_records([], str(p))
    assert p.read_text() == "" and read_diagnostics(str(p)) == []
    c = tmp_path / "s.csv"
    write_records(SweepResult([]), str(c))
    assert c.read_text().strip() == ",".join(SWEEP_FIELDS)
    assert read_sweep(str(c)).rows == []


def test_single_line_parses_as_json(tmp_path):
    rec = _rec(0.5, np.random.default_rng(0))
    obj = json.loads(diagnostics_line(rec))
    assert list(obj) == list(DIAG_FIELDS)
    p = tmp_path / "d.jsonl"
    write_records([rec], str(p))
    assert len(p.read_text().splitlines()) == 1


def test_diagnostics_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(1)
    recs = [_rec(0.1 * i, rng) for i in range(30)]
    p = tmp_path / "d.jsonl"
    write_records(recs, str(p))
    back = read_records(str(p))
    assert len(back) == len(recs)
    for a, b in zip(recs, back):
        for name in ("time", "energy_EN", "min_h", "min_a", "mass", "hamiltonian"):
            x, y = getattr(a, name), getattr(b, name)
            assert x == y or (math.isnan(x) and math.isnan(y))
        assert a.E == b.E and a.flags == b.flags
        assert a.F[0] == b.F[0] and math.isnan(b.F[1])


def test_sweep_round_trip_and_append(tmp_path):
    rows = [_row(0.1), _row(0.05, censored=True), _row(1 / 3)]
    p = tmp_path / "s.csv"
    write_records(SweepResult(rows), str(p))
    assert read_sweep(str(p)).rows == rows
    q = tmp_path / "a.csv"
    for r in rows:
        append_sweep_row(str(q), r)
    assert q.read_text() == p.read_text()
    with open(q, "a") as fh:
        fh.write("0.2,0.1,1")  # interrupted write
    assert read_sweep(str(q)).rows == rows


def test_unwritable_path_names_the_path(tmp_path):
    target = str(tmp_path / "missing" / "d.jsonl")
    with pytest.raises(OSError, match="missing"):
        write_records([], target)
