import math

import numpy as np
import pytest

from capwaves.energy import (E0_series, cancellation_diagnostic, diagnostics_at, energy_EN, energy_parts,
                             equivalence_check, fit_exponent, flat_equivalence_ratio, good_unknowns,
                             h1_sigma_norm, multi_indices, predecessor, twisted_energy)
from capwaves.errors import DegenerateSweepError, NotEnoughHistory
from capwaves.evolution import (Snapshot, SurfaceState, TrajectoryRecord, WaterWavesModel, initial_state,
                                run_simulation)
from capwaves.params import DimensionlessParams
from capwaves.spectral import Grid


@pytest.fixture(scope="module")
def g():
    return Grid(32)


def short_run(g, p, state, b=None, steps=6, dt=0.01, nz=16):
    model = WaterWavesModel(g, p, b, nz=nz, solver_tol=1e-12)
    res = run_simulation(state, model.b, p, T_end=steps * dt, dt=dt, model=model, monitors=False)
    return res.record, model


def static_record(g, p, zeta):
    model = WaterWavesModel(g, p)
    rec = TrajectoryRecord(5)
    z = np.zeros(g.shape)
    for j in range(5):
        rec.push(Snapshot(0.1 * j, zeta, z, z, z, z))
    return rec, model


def test_h1_sigma_examples(g):
    x = g.x
    assert h1_sigma_norm(np.cos(x), DimensionlessParams(eps=0, mu=1, bond=1.0), g) == pytest.approx(
        math.sqrt(2 * math.pi), rel=1e-13)
    assert h1_sigma_norm(np.full(g.shape, -3.0), DimensionlessParams(eps=0, mu=1, bond=1.0), g) == pytest.approx(
        3 * math.sqrt(2 * math.pi))
    f = np.cos(x) + np.sin(4 * x)
    big = h1_sigma_norm(f, DimensionlessParams(eps=0, mu=1, bond=1e12), g)
    assert abs(big - g.l2(f)) < 1e-6


def test_multi_indices_and_predecessor():
    assert multi_indices(1, 2) == [((0,), 1), ((1,), 0), ((0,), 2), ((1,), 1), ((2,), 0)]
    assert len(multi_indices(2, 2)) == 2 + 1 + 3 + 2 + 1
    assert predecessor(((1,), 1)) == (((1,), 0), ("t", None))
    assert predecessor(((2,), 0)) == (((1,), 0), ("x", 0))


def test_good_unknowns_rest_and_raw(g):
    p = DimensionlessParams(eps=0.2, mu=0.1, bond=5.0)
    rec, model = short_run(g, p, initial_state(g, "rest"))
    gu = good_unknowns(rec, model, 2)
    for key in gu.keys:
        z, ps = gu[key]
        assert not np.any(z) and not np.any(ps)
    s = SurfaceState(0.3 * np.cos(g.x), 0.2 * np.sin(g.x))
    rec, model = short_run(g, p, s)
    gu = good_unknowns(rec, model, 2)
    z0, p0 = gu[gu.zero_key]
    assert z0 is rec[gu.index].zeta and p0 is rec[gu.index].psi


def test_first_time_derivative_two_ways(g):
    """k = 1 from the equation against a centred difference of the stored states: O(dt^2)."""
    p = DimensionlessParams(eps=0.2, mu=0.1, beta=0.5, bond=5.0)
    s = SurfaceState(0.3 * np.cos(g.x), 0.2 * np.sin(g.x))
    errs = []
    for dt in (0.02, 0.01):
        rec, model = short_run(g, p, s, b=0.3 * np.cos(g.x), dt=dt)
        i = rec.centre(1)
        fd = (rec[i + 1].zeta - rec[i - 1].zeta) / (2 * dt)
        errs.append(np.max(np.abs(fd - rec[i].dzeta)))
    assert errs[0] / errs[1] == pytest.approx(4, rel=0.2)


def test_energy_rest_zero(g):
    p = DimensionlessParams(eps=0.2, mu=0.1, bond=5.0)
    rec, model = short_run(g, p, initial_state(g, "rest"))
    gu = good_unknowns(rec, model, 2)
    assert energy_EN(gu, p, g) == 0.0
    for k in range(3):
        E, F = twisted_energy(gu, rec, model, k)
        assert E == 0.0 and F == 0.0
    assert cancellation_diagnostic(rec, model).residual == 0.0
    rep = equivalence_check(gu, rec, model)
    assert rep.degenerate and rep.skipped


def test_energy_static_single_mode(g):
    """Static cos mode: |zeta|_2 plus the H^1_sigma norms of zeta_x and zeta_xx, by hand."""
    a = 0.7
    p = DimensionlessParams(eps=0.0, mu=0.1, bond=4.0)
    rec, model = static_record(g, p, a * np.cos(g.x))
    gu = good_unknowns(rec, model, 2)
    val = energy_EN(gu, p, g)
    s = math.sqrt(1 + 1 / p.bond)
    assert val == pytest.approx(a * math.sqrt(math.pi) * (1 + 2 * s), rel=1e-12)
    # and the same by direct quadrature on a fine grid
    xf = np.linspace(0, 2 * math.pi, 4096, endpoint=False)
    dx = xf[1] - xf[0]
    l2 = lambda f: math.sqrt(np.sum(f * f) * dx)
    d1, d2, d3 = -a * np.sin(xf), -a * np.cos(xf), a * np.sin(xf)
    quad = l2(a * np.cos(xf)) + math.sqrt(l2(d1) ** 2 + l2(d2) ** 2 / p.bond) + \
        math.sqrt(l2(d2) ** 2 + l2(d3) ** 2 / p.bond)
    assert val == pytest.approx(quad, rel=1e-12)


def test_energy_homogeneous_at_eps_zero(g):
    p = DimensionlessParams(eps=0.0, mu=0.1, beta=0.5, bond=4.0)
    b = 0.5 * np.cos(2 * g.x)
    s = SurfaceState(0.3 * np.cos(g.x), 0.2 * np.sin(g.x))
    two = SurfaceState(2 * s.zeta, 2 * s.psi)
    p1 = energy_parts(good_unknowns(*short_run(g, p, s, b), 2), p, g)
    p2 = energy_parts(good_unknowns(*short_run(g, p, two, b), 2), p, g)
    for key in p1:
        v1, v2 = np.atleast_1d(p1[key]), np.atleast_1d(p2[key])
        assert np.allclose(v2, 2 * v1, rtol=1e-8)


def test_corrector_vanishes_at_eps_zero(g):
    p = DimensionlessParams(eps=0.0, mu=0.1, bond=4.0)
    rec, model = short_run(g, p, SurfaceState(0.3 * np.cos(g.x), 0.2 * np.sin(g.x)))
    gu = good_unknowns(rec, model, 2)
    E, F = twisted_energy(gu, rec, model, 2)
    assert F == 0.0 and E > 0


def test_corrector_is_order_eps(g):
    ratios = []
    for eps in (0.1, 0.05, 0.025):
        p = DimensionlessParams(eps=eps, mu=0.1, beta=1.0, bond=10.0)
        rec, model = short_run(g, p, initial_state(g, "travelling", params=p), b=0.25 * np.cos(g.x))
        gu = good_unknowns(rec, model, 2)
        E, F = twisted_energy(gu, rec, model, 2)
        assert E > 0
        ratios.append(abs(F) / eps / E)
    # |F| / eps does not grow as eps shrinks (here it even decays)
    assert ratios[1] <= ratios[0] and ratios[2] <= ratios[0]


def test_twisted_energy_positive(g):
    p = DimensionlessParams(eps=0.3, mu=0.1, beta=0.5, bond=10.0)
    rec, model = short_run(g, p, SurfaceState(0.5 * np.cos(g.x), 0.3 * np.sin(g.x)), b=0.5 * np.cos(2 * g.x))
    gu = good_unknowns(rec, model, 2)
    for k in (1, 2):
        assert twisted_energy(gu, rec, model, k)[0] > 0


def test_energy_continuous_in_state(g):
    p = DimensionlessParams(eps=0.2, mu=0.1, bond=5.0)
    base = SurfaceState(0.3 * np.cos(g.x), 0.2 * np.sin(g.x))
    E = lambda s: energy_EN(good_unknowns(*short_run(g, p, s), 2), p, g)
    e0 = E(base)
    diffs = []
    for d in (1e-3, 1e-4):
        pert = SurfaceState(base.zeta + d * (np.cos(g.x) + np.sin(2 * g.x)), base.psi)
        diffs.append(abs(E(pert) - e0))
    # Lipschitz: ten times smaller perturbation, at least about ten times smaller change
    assert diffs[0] / diffs[1] >= 8


def test_equivalence_random_state(g):
    rng = np.random.default_rng(3)
    z = sum(rng.normal() * np.cos(k * g.x + rng.uniform(0, 6)) / k**2 for k in range(1, 6))
    ps = sum(rng.normal() * np.sin(k * g.x + rng.uniform(0, 6)) / k**2 for k in range(1, 6))
    p = DimensionlessParams(eps=0.5, mu=0.1, beta=0.5)
    rec, model = short_run(g, p, SurfaceState(0.5 * z / np.max(np.abs(z)), ps), b=0.5 * np.cos(g.x))
    rep = equivalence_check(good_unknowns(rec, model, 2), rec, model)
    vals = list(rep.ratios.values()) + list(rep.dno_ratios.values())
    assert all(np.isfinite(vals)) and rep.M <= 10


def test_flat_equivalence_ratio_values():
    assert flat_equivalence_ratio(1, 1.0) == pytest.approx(math.tanh(1) * 2, rel=1e-14)
    for mu in np.logspace(-4, 0, 9):
        assert 1.0 <= flat_equivalence_ratio(1, mu) <= 1.53


def test_cancellation_linear_flat(g):
    p = DimensionlessParams(eps=0.0, mu=0.1, bond=4.0)
    rec, model = short_run(g, p, SurfaceState(0.5 * np.cos(g.x), 0.3 * np.sin(2 * g.x)))
    gu = good_unknowns(rec, model, 2)
    for key in [gu.zero_key] + gu.keys:
        assert cancellation_diagnostic(rec, model, key).residual <= 1e-12


def test_cancellation_variable_state(g):
    p = DimensionlessParams(eps=0.3, mu=0.1, beta=1.0, bond=10.0)
    rec, model = short_run(g, p, SurfaceState(0.5 * np.cos(g.x), 0.3 * np.sin(g.x)), b=0.3 * np.cos(g.x))
    rep = cancellation_diagnostic(rec, model)
    assert rep.direct <= 1e-12 and rep.symmetric <= 1e-8


def test_diagnostics_record(g):
    p = DimensionlessParams(eps=0.2, mu=0.1, beta=0.5, bond=5.0)
    rec, model = short_run(g, p, SurfaceState(0.3 * np.cos(g.x), 0.2 * np.sin(g.x)), b=0.3 * np.cos(g.x))
    d = diagnostics_at(rec, model, energies=True)
    assert not d.failed and set(d.E) == {0, 1, 2} and d.min_h > 0 and d.min_a > 0
    assert len(E0_series(rec, model)) == len(rec)
    short = TrajectoryRecord(5)
    short.push(rec[0])
    with pytest.raises(NotEnoughHistory):
        diagnostics_at(short, model)


def test_fit_exponent():
    assert fit_exponent([1, 10, 100], [2, 20, 200]) == pytest.approx(1.0)
    with pytest.raises(DegenerateSweepError):
        fit_exponent([1, 1], [1, 2])
