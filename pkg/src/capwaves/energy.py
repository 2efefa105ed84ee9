"""Energy diagnostics: H^1_sigma norm, good unknowns, the energy E^N_sigma,
twisted energies E_k with corrector F_N, norm equivalence and the
cancellation of the 1/eps pairing.

Time derivatives ``(eps d_t')^k`` of the rescaled clock are plain
derivatives ``d_t^k`` of the original clock, which is what the trajectory
record stores.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateSweepError, NotEnoughHistory
from .evolution import rayleigh_taylor, hamiltonian
from .spectral import P_norm, P_symbol, apply_multiplier, sobolev_norm
from .tension import k_apply, k_sub_operator


def default_t0(d):
    return d / 2.0 + 0.51


def h1_sigma_norm(f, params, grid):
    """``sqrt(|f|_2^2 + (1/Bo) |grad_gamma f|_2^2)``."""
    f = np.asarray(f, dtype=float)
    val = grid.inner(f, f)
    if params.inv_bond:
        val += params.inv_bond * sum(grid.inner(c, c) for c in grid.grad(f, params.gamma))
    return math.sqrt(max(val, 0.0))


def multi_indices(d, N_d):
    """All ``(alpha, k)`` with ``1 <= |alpha| + k <= N_d``, lowest order first."""
    out = []
    for order in range(1, N_d + 1):
        for k in range(order, -1, -1):
            for alpha in itertools.product(range(order - k + 1), repeat=d):
                if sum(alpha) == order - k:
                    out.append((tuple(alpha), k))
    return out


def spatial_derivative(f, alpha, grid, gamma=1.0):
    """``d^alpha`` with the transverse derivative scaled by ``gamma``."""
    if not any(alpha):
        return f
    sym = 1.0
    for ax, a in enumerate(alpha):
        if a:
            k = grid.deriv_wavenumbers[ax] if a % 2 else grid.wavenumbers[ax]
            scale = gamma if ax == 1 else 1.0
            sym = sym * (1j * scale * k) ** a
    return grid.ifft(sym * grid.fft(f))


def _time_derivatives(record, i, kmax):
    """``d_t^k`` of zeta and psi at entry ``i`` for ``k <= kmax``.

    ``k = 1`` comes from the stored tendencies (the equation itself); higher
    orders are centred differences of those tendencies.
    """
    s = record[i]
    out = {0: (s.zeta, s.psi)}
    if kmax >= 1:
        out[1] = (s.dzeta, s.dpsi)
    if kmax >= 2:
        dt = record.dt
        m, p = record[i - 1], record[i + 1]
        out[2] = ((p.dzeta - m.dzeta) / (2 * dt), (p.dpsi - m.dpsi) / (2 * dt))
    if kmax >= 3:
        out[3] = ((p.dzeta - 2 * s.dzeta + m.dzeta) / dt**2, (p.dpsi - 2 * s.dpsi + m.dpsi) / dt**2)
    if kmax >= 4:
        mm, pp = record[i - 2], record[i + 2]
        out[4] = ((pp.dzeta - 2 * p.dzeta + 2 * m.dzeta - mm.dzeta) / (2 * dt**3),
                  (pp.dpsi - 2 * p.dpsi + 2 * m.dpsi - mm.dpsi) / (2 * dt**3))
    return out


def _depth(N_d):
    return 0 if N_d <= 1 else (1 if N_d <= 3 else 2)


@dataclass
class GoodUnknowns:
    time: float
    zeta: dict
    psi: dict
    wbar: np.ndarray
    N_d: int
    index: int = -1

    def __getitem__(self, key):
        return self.zeta[key], self.psi[key]

    @property
    def keys(self):
        return [k for k in self.zeta if k != self.zero_key]

    @property
    def zero_key(self):
        return ((0,) * self.wbar.ndim, 0)


def good_unknowns(record, model, N_d=2, index=None):
    """Good unknowns at a record entry (default: the latest usable one)."""
    if not 1 <= N_d <= 4:
        raise ValueError(f"N_d must be between 1 and 4, got {N_d}")
    depth = _depth(N_d)
    i = record.centre(max(depth, 1)) if index is None else index
    if i - depth < 0 or i + depth > len(record) - 1:
        raise NotEnoughHistory(f"entry {i} lacks {depth} neighbours for N_d={N_d}")
    p = model.params
    g = model.grid
    snap = record[i]
    w, _ = model.velocities(snap)
    td = _time_derivatives(record, i, N_d)
    zero = ((0,) * g.d, 0)
    Z = {zero: snap.zeta}
    P = {zero: snap.psi}
    for alpha, k in multi_indices(g.d, N_d):
        dz = spatial_derivative(td[k][0], alpha, g, p.gamma)
        dp = spatial_derivative(td[k][1], alpha, g, p.gamma)
        Z[(alpha, k)] = dz
        P[(alpha, k)] = dp - p.eps * w * dz
    return GoodUnknowns(snap.t, Z, P, w, N_d, i)


def energy_EN(gu, params, grid, t0=None):
    """``|zeta|_2 + |P psi|_{H^{t0+3/2}} + sum |zeta_(a,k)|_{H^1_sigma} + |P psi_(a,k)|_2``."""
    t0 = default_t0(grid.d) if t0 is None else t0
    z0, p0 = gu[gu.zero_key]
    total = grid.l2(z0) + P_norm(p0, params, grid, t0 + 1.5)
    for key in gu.keys:
        z, ps = gu[key]
        total += h1_sigma_norm(z, params, grid) + P_norm(ps, params, grid, 0.0)
    return total


def energy_parts(gu, params, grid, t0=None):
    """The individual norms entering :func:`energy_EN`."""
    t0 = default_t0(grid.d) if t0 is None else t0
    z0, p0 = gu[gu.zero_key]
    parts = {"zeta": grid.l2(z0), "P psi": P_norm(p0, params, grid, t0 + 1.5)}
    for key in gu.keys:
        z, ps = gu[key]
        parts[key] = (h1_sigma_norm(z, params, grid), P_norm(ps, params, grid, 0.0))
    return parts


# twisted energies ----------------------------------------------------------

def _k_form(zeta, u, v, params, grid):
    """``(K(a grad zeta) grad u, grad v)_2``."""
    a = params.capillary_scale
    gz = grid.grad(zeta, params.gamma)
    gu = grid.grad(u, params.gamma)
    gv = grid.grad(v, params.gamma)
    d = len(gz)

    def dens(*f):
        Ku = k_apply([a * c for c in f[:d]], list(f[d:2 * d]))
        return sum(x * y for x, y in zip(Ku, f[2 * d:]))

    return float(np.sum(grid.dealiased(dens, *gz, *gu, *gv))) * grid.cell


def E0(zeta, psi, g_psi, params, grid):
    """``|zeta|_2^2/2 + (G psi, psi)/(2 mu) + (1/2Bo)(grad zeta / sqrt(1 + eps^2 mu |grad zeta|^2), grad zeta)``."""
    p = params
    val = 0.5 * grid.inner(zeta, zeta) + grid.inner(g_psi, psi) / (2 * p.mu)
    if p.inv_bond:
        a2 = p.capillary_scale**2
        gz = grid.grad(zeta, p.gamma)
        dens = grid.dealiased(lambda *g: sum(c * c for c in g) / np.sqrt(1.0 + a2 * sum(c * c for c in g)), *gz)
        val += 0.5 * p.inv_bond * float(np.sum(dens)) * grid.cell
    return val


def E_single(zeta_k, psi_k, a_field, zeta, params, grid, dno):
    """``(a zeta_k, zeta_k) + (1/Bo)(K grad zeta_k, grad zeta_k) + (1/mu)(G psi_k, psi_k)``."""
    p = params
    val = grid.inner(a_field * zeta_k, zeta_k)
    if p.inv_bond:
        val += p.inv_bond * _k_form(zeta, zeta_k, zeta_k, p, grid)
    val += grid.inner(dno(psi_k), psi_k) / p.mu
    return val


def predecessor(key):
    """Multi-index one order lower and the derivative direction removed."""
    alpha, k = key
    if k >= 1:
        return (alpha, k - 1), ("t", None)
    ax = next(i for i, a in enumerate(alpha) if a)
    lower = tuple(a - (1 if i == ax else 0) for i, a in enumerate(alpha))
    return (lower, 0), ("x", ax)


def _direction(gu, record, model, how):
    kind, ax = how
    snap = record[gu.index]
    if kind == "t":
        return snap.dzeta
    alpha = tuple(1 if i == ax else 0 for i in range(model.grid.d))
    return spatial_derivative(snap.zeta, alpha, model.grid, model.params.gamma)


def twisted_energy(gu, record, model, k, a_field=None):
    """``(E_k, F_k)`` summed over the multi-indices of total order ``k``."""
    p = model.params
    g = model.grid
    snap = record[gu.index]
    solver = model.aux_solver
    solver.set_surface(snap.zeta)
    dno = solver.dno
    if k == 0:
        return E0(snap.zeta, snap.psi, snap.g_psi, p, g), 0.0
    if a_field is None:
        a_field = rayleigh_taylor(record, model, gu.index)
    keys = [key for key in gu.keys if sum(key[0]) + key[1] == k]
    E = sum(E_single(*gu[key], a_field, snap.zeta, p, g, dno) for key in keys)
    F = 0.0
    if k == gu.N_d and p.eps != 0.0:
        for key in keys:
            prev, how = predecessor(key)
            zp, pp = gu[prev]
            zk, pk = gu[key]
            direction = _direction(gu, record, model, how)
            term = 0.0
            if p.inv_bond:
                term += p.inv_bond * g.inner(k_sub_operator(snap.zeta, direction, zp, p, g), zk)
            dG = solver.shape_derivative(direction, pp, snap.g_psi if prev == gu.zero_key else None)
            term += g.inner(dG, pk) / p.mu
            F += p.eps * term
    return E, F


# equivalence -----------------------------------------------------------------

@dataclass
class EquivalenceReport:
    ratios: dict
    dno_ratios: dict
    M: float
    skipped: list = field(default_factory=list)

    @property
    def degenerate(self):
        return not self.ratios


def equivalence_check(gu, record, model, tiny=1e-14):
    """Each twisted-energy piece against its squared-norm counterpart.

    Also reports the pure DN ratio ``(1/mu)(G psi, psi) / |P psi|_2^2`` for
    each good unknown.  ``M`` is the smallest constant with every ratio in
    ``[1/M, M]``.
    """
    p = model.params
    g = model.grid
    snap = record[gu.index]
    solver = model.aux_solver
    solver.set_surface(snap.zeta)
    a_field = rayleigh_taylor(record, model, gu.index) if len(record) >= 3 else np.ones(g.shape)
    ratios, dno_ratios, skipped = {}, {}, []
    z0, p0 = gu[gu.zero_key]
    den0 = 0.5 * (h1_sigma_norm(z0, p, g) ** 2 + P_norm(p0, p, g) ** 2)
    if den0 > tiny:
        ratios[gu.zero_key] = E0(z0, p0, snap.g_psi, p, g) / den0
    else:
        skipped.append(gu.zero_key)
    for key in [gu.zero_key] + gu.keys:
        zk, pk = gu[key]
        Pp = P_norm(pk, p, g) ** 2
        Gk = snap.g_psi if key == gu.zero_key else solver.dno(pk)
        if Pp > tiny:
            dno_ratios[key] = g.inner(Gk, pk) / p.mu / Pp
        if key == gu.zero_key:
            continue
        den = h1_sigma_norm(zk, p, g) ** 2 + Pp
        if den <= tiny:
            skipped.append(key)
            continue
        val = g.inner(a_field * zk, zk) + g.inner(Gk, pk) / p.mu
        if p.inv_bond:
            val += p.inv_bond * _k_form(snap.zeta, zk, zk, p, g)
        ratios[key] = val / den
    allr = list(ratios.values()) + list(dno_ratios.values())
    if allr and min(allr) > 0:
        M = max(max(allr), 1.0 / min(allr))
    else:
        M = math.inf if allr else float("nan")
    return EquivalenceReport(ratios, dno_ratios, M, skipped)


def flat_equivalence_ratio(k, mu):
    """Closed-form ``(1/mu) g0(k) / P(k)^2`` for one flat-strip mode."""
    q = math.sqrt(mu) * k
    return math.tanh(q) * (1.0 + q) / q


# cancellation -----------------------------------------------------------------

@dataclass
class CancellationReport:
    direct: float
    symmetric: float

    @property
    def residual(self):
        return max(self.direct, self.symmetric)


def _principal(zeta_k, a_field, zeta, params, grid):
    """``a zeta_k - (1/Bo) div_gamma K(a grad zeta) grad_gamma zeta_k``."""
    p = params
    out = a_field * zeta_k
    if p.inv_bond:
        a = p.capillary_scale
        gz = grid.grad(zeta, p.gamma)
        gk = grid.grad(zeta_k, p.gamma)
        d = len(gz)
        q = grid.dealiased(lambda *f: k_apply([a * c for c in f[:d]], list(f[d:])), *gz, *gk)
        out = out - p.inv_bond * grid.div(q, p.gamma)
    return out


def cancellation_diagnostic(record, model, key=None, N_d=2):
    """Normalised residual of ``(S^1 U_(k), A U_(k))_2``.

    ``A = [[0, -G/mu], [L, 0]]`` and ``S^1 = diag(L, G/mu)`` with
    ``L = a - (1/Bo) div K grad``.  ``direct`` pairs the assembled vectors;
    ``symmetric`` evaluates the second half through ``(G L zeta_k, psi_k)``,
    so it measures the symmetry of the discrete ``G`` as well.
    """
    p = model.params
    g = model.grid
    gu = good_unknowns(record, model, N_d)
    key = gu.zero_key if key is None else key
    snap = record[gu.index]
    solver = model.aux_solver
    solver.set_surface(snap.zeta)
    a_field = rayleigh_taylor(record, model, gu.index)
    zk, pk = gu[key]
    Lz = _principal(zk, a_field, snap.zeta, p, g)
    Gp = snap.g_psi if key == gu.zero_key else solver.dno(pk)
    S1 = (Lz, Gp / p.mu)
    AU = (-Gp / p.mu, Lz)
    norm = math.sqrt(g.inner(S1[0], S1[0]) + g.inner(S1[1], S1[1])) * \
        math.sqrt(g.inner(AU[0], AU[0]) + g.inner(AU[1], AU[1]))
    if norm == 0.0:
        return CancellationReport(0.0, 0.0)
    direct = g.inner(S1[0], AU[0]) + g.inner(S1[1], AU[1])
    sym = -g.inner(Lz, Gp) / p.mu + g.inner(solver.dno(Lz), pk) / p.mu
    return CancellationReport(abs(direct) / norm, abs(sym) / norm)


def E0_series(record, model):
    """``(t, E_0)`` for every entry of the record, from cached ``G psi``."""
    p = model.params
    g = model.grid
    return [(s.t, E0(s.zeta, s.psi, s.g_psi, p, g)) for s in record]


def fit_exponent(x, y):
    """Least-squares slope of ``log y`` against ``log x``."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if x.size < 2 or np.any(x <= 0) or np.any(y <= 0):
        raise DegenerateSweepError("need at least two positive points to fit an exponent")
    if np.ptp(np.log(x)) == 0:
        raise DegenerateSweepError("all abscissae coincide")
    return float(np.polyfit(np.log(x), np.log(y), 1)[0])


# diagnostics record -------------------------------------------------------------

@dataclass
class DiagnosticsRecord:
    time: float
    energy_EN: float | None
    E: dict
    F: dict
    min_h: float
    min_a: float
    mass: float
    hamiltonian: float
    flags: list = field(default_factory=list)

    @property
    def failed(self):
        vals = [self.energy_EN, self.min_h, self.min_a, self.mass, self.hamiltonian]
        vals += list(self.E.values()) + list(self.F.values())
        return any(v is None or not math.isfinite(v) for v in vals)


def diagnostics_at(record, model, N_d=2, energies=False):
    """Diagnostics at the latest record entry that has the needed neighbours."""
    p = model.params
    g = model.grid
    depth = max(_depth(N_d), 1)
    i = record.centre(depth)
    snap = record[i]
    gu = good_unknowns(record, model, N_d, index=i)
    a_field = rayleigh_taylor(record, model, i)
    flags = []
    if model.filter:
        flags.append("filtered")
    min_a = float(np.min(a_field))
    if min_a <= 0:
        flags.append("negative-rt")
    E, F = {}, {}
    if energies:
        for k in range(N_d + 1):
            E[k], F[k] = twisted_energy(gu, record, model, k, a_field)
    rec = DiagnosticsRecord(
        time=snap.t,
        energy_EN=energy_EN(gu, p, g),
        E=E,
        F=F,
        min_h=float(np.min(model.height(snap.zeta))),
        min_a=min_a,
        mass=g.inner(snap.zeta, np.ones(g.shape)),
        hamiltonian=hamiltonian(snap.zeta, snap.psi, p, g, snap.g_psi),
        flags=flags,
    )
    if rec.failed:
        rec.flags.append("failed")
    return rec
