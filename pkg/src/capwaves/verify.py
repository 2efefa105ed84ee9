"""Quick property checks of the DN operator and the energy diagnostics.

Each check returns a :class:`Check`; ``verify_suite`` runs them all on the
surface, bottom and parameters of a configuration.
"""

import math
from dataclasses import dataclass

import numpy as np

from .dno import DNOSolver, StripGrid, apply_dno, dno_flat_analytic
from .energy import cancellation_diagnostic, flat_equivalence_ratio
from .evolution import run_simulation
from .swlimit import divergence_identity_defect


@dataclass
class Check:
    name: str
    value: float
    bound: float
    passed: bool
    detail: str = ""

    def line(self):
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag}  {self.name}: {self.value:.3e} (bound {self.bound:g}) {self.detail}".rstrip()


def _check(name, value, bound, detail="", lower=False):
    ok = math.isfinite(value) and (value >= bound if lower else value <= bound)
    return Check(name, float(value), bound, ok, detail)


def check_flat_oracle(grid, mus=(1.0, 0.1, 0.01), ks=(1, 2, 4), nz=32):
    from .params import DimensionlessParams
    strip = StripGrid(grid, nz)
    zero = np.zeros(grid.shape)
    worst = 0.0
    for mu in mus:
        p = DimensionlessParams(eps=0.0, mu=mu)
        for k in ks:
            psi = np.cos(k * grid.x)
            G = apply_dno(psi, zero, zero, p, strip, tol=1e-13)
            ref = dno_flat_analytic(psi, p, grid)
            worst = max(worst, grid.l2(G - ref) / grid.l2(ref))
    return _check("flat-strip DN oracle", worst, 1e-8)


def symmetry_defect(solver, f, h):
    g = solver.strip.grid
    Gf, Gh = solver.dno(f), solver.dno(h)
    scale = g.l2(Gf) * g.l2(h) + g.l2(f) * g.l2(Gh)
    return abs(g.inner(Gf, h) - g.inner(f, Gh)) / scale


def mean_defect(solver, f):
    g = solver.strip.grid
    Gf = solver.dno(f)
    return abs(g.inner(Gf, np.ones(g.shape))) / (g.l2(Gf) * g.l2(np.ones(g.shape)))


def _test_fields(grid):
    x = grid.x
    y = grid.y if grid.d == 2 else 0.0
    f = np.cos(x) + 0.3 * np.sin(2 * x + y) + 0.1 * np.cos(3 * x)
    h = np.sin(x) - 0.2 * np.cos(4 * x) + 0.05 * np.sin(5 * x - y)
    return f, h


def verify_suite(config, nz=None):
    grid = config.grid
    p = config.params
    nz = nz or config["grid"]["nz"]
    strip = StripGrid(grid, nz, config["grid"]["collocation"])
    b = config.bottom()
    init = config.initial()
    zeta = init.zeta
    f, h = _test_fields(grid)
    out = [check_flat_oracle(grid)]

    solver = DNOSolver(strip, p, b, tol=1e-13)
    solver.set_surface(zeta)
    out.append(_check("G symmetry", symmetry_defect(solver, f, h), 1e-10))
    out.append(_check("G annihilates the mean", mean_defect(solver, f), 1e-10))

    # shape derivative against a central difference
    dG = solver.shape_derivative(h, f)
    delta = 1e-3
    plus = solver.dno(f, zeta + delta * h)
    minus = solver.dno(f, zeta - delta * h)
    solver.set_surface(zeta)
    fd = (plus - minus) / (2 * delta)
    scale = max(grid.l2(dG), 1e-300)
    out.append(_check("shape derivative vs FD", grid.l2(dG - fd) / scale if p.eps else grid.l2(fd), 1e-5))

    out.append(_check("divergence identity", divergence_identity_defect(solver, f, zeta), 1e-8))

    ratios = [flat_equivalence_ratio(k, mu) for mu in np.logspace(-4, 0, 9) for k in (1, 2, 4, 8)]
    M = max(max(ratios), 1 / min(ratios))
    out.append(_check("flat norm equivalence M", M, 3.0))

    # cancellation on a short run of the configured model
    dt = config["integrator"]["dt"]
    model = config.model()
    res = run_simulation(init, model.b, p, T_end=6 * dt, dt=dt, model=model, monitors=False)
    if res.trip_reason is None:
        rep = cancellation_diagnostic(res.record, model, N_d=1)
        out.append(_check("1/eps cancellation (symmetric pairing)", rep.residual, 1e-8))
    else:
        out.append(Check("1/eps cancellation (symmetric pairing)", math.nan, 1e-8, False, res.trip_reason))
    return out


__all__ = ["Check", "verify_suite", "check_flat_oracle", "symmetry_defect", "mean_defect"]
