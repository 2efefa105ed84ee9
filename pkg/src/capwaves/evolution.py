"""Time evolution of the surface unknowns (zeta, psi).

Time is the original dimensionless time throughout.  The rescaled system
(time ``t' = eps t``) is exposed through :func:`rhs_rescaled` and the
``system="rescaled"`` option, which only changes the clock used by
:meth:`WaterWavesModel.step`.
"""

import math
from collections import deque
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .dno import DNOSolver, StripGrid, height, surface_velocities_from
from .errors import (CapwavesError, InvalidInputError, NotEnoughHistory, NumericDomainError,
                     SolverFailure, StiffnessFailure, VanishingDepthError)
from .spectral import Grid
from .tension import scaled_curvature_rhs, tension_energy_density


@dataclass
class SurfaceState:
    zeta: np.ndarray
    psi: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.zeta = np.array(self.zeta, dtype=float)
        self.psi = np.array(self.psi, dtype=float)
        if self.zeta.shape != self.psi.shape:
            raise InvalidInputError("zeta and psi must live on the same grid")
        if not (np.all(np.isfinite(self.zeta)) and np.all(np.isfinite(self.psi))):
            raise InvalidInputError("state contains non-finite values")
        self.psi -= self.psi.mean()

    def copy(self):
        return SurfaceState(self.zeta.copy(), self.psi.copy(), self.t)


class Tendency(NamedTuple):
    dzeta: np.ndarray
    dpsi: np.ndarray
    gauge: float  # constant removed from dpsi
    g_psi: np.ndarray


@dataclass
class Snapshot:
    t: float
    zeta: np.ndarray
    psi: np.ndarray
    dzeta: np.ndarray
    dpsi: np.ndarray
    g_psi: np.ndarray


class TrajectoryRecord:
    """Ring buffer of the most recent states with their tendencies."""

    def __init__(self, maxlen=5):
        if maxlen < 5:
            raise InvalidInputError("a trajectory record keeps at least 5 states")
        self.maxlen = maxlen
        self.items = deque(maxlen=maxlen)

    def __len__(self):
        return len(self.items)

    def __getitem__(self, i):
        return self.items[i]

    def clear(self):
        self.items.clear()

    def push(self, snap):
        if self.items:
            last = self.items[-1]
            if not snap.t > last.t:
                raise InvalidInputError("record timestamps must increase")
            if len(self.items) >= 2:
                dt0 = self.items[-1].t - self.items[-2].t
                if abs((snap.t - last.t) - dt0) > 1e-9 * max(1.0, abs(dt0)):
                    raise InvalidInputError("record requires a uniform time step")
        self.items.append(snap)

    @property
    def dt(self):
        if len(self.items) < 2:
            raise NotEnoughHistory("record holds fewer than 2 states")
        return self.items[-1].t - self.items[-2].t

    def centre(self, depth=1):
        """Index of the state with ``depth`` neighbours on each side (latest such)."""
        if len(self.items) < 2 * depth + 1:
            raise NotEnoughHistory(f"need {2 * depth + 1} states, record holds {len(self.items)}")
        return len(self.items) - 1 - depth


# linear flat-bottom part --------------------------------------------------

def linear_symbols(grid, params, strip=None):
    """``g0 = sqrt(mu)k tanh(sqrt(mu)k)``, ``s = 1 + k^2/Bo`` and ``omega``.

    With ``strip`` given, ``g0`` is the symbol of the discrete flat-strip
    operator instead, read off its response to a unit impulse.
    """
    k = grid.kgamma(params.gamma)
    if strip is None:
        q = math.sqrt(params.mu) * k
        g0 = q * np.tanh(q)
    else:
        flat = DNOSolver(strip, params.replace(eps=0.0, beta=0.0), tol=1e-14)
        delta = np.zeros(grid.shape)
        delta[(0,) * grid.d] = 1.0
        g0 = np.maximum(grid.fft(flat.dno(delta)).real, 0.0)
    s = 1.0 + params.inv_bond * k**2
    omega = np.sqrt(g0 / params.mu * s)
    return g0, s, omega


def dispersion_omega(k, params):
    """Linear gravity-capillary frequency in original time."""
    q = math.sqrt(params.mu) * np.asarray(k, dtype=float)
    return np.sqrt(q * np.tanh(q) / params.mu * (1.0 + np.asarray(k, float) ** 2 * params.inv_bond))


class _Propagator:
    """Exact flow of the linearised flat-bottom system, mode by mode."""

    def __init__(self, grid, params, strip=None):
        self.grid = grid
        self.g0, self.s, self.omega = linear_symbols(grid, params, strip)
        self.mu = params.mu
        self._cache = {}

    def matrices(self, tau):
        key = float(tau)
        m = self._cache.get(key)
        if m is None:
            w = self.omega
            c = np.cos(w * tau)
            with np.errstate(invalid="ignore", divide="ignore"):
                sinc = np.where(w > 0, np.sin(w * tau) / np.where(w > 0, w, 1.0), tau)
            m = (c, self.g0 / self.mu * sinc, -self.s * sinc)
            if len(self._cache) > 8:
                self._cache.clear()
            self._cache[key] = m
        return m

    def apply(self, tau, zeta, psi):
        g = self.grid
        c, a12, a21 = self.matrices(tau)
        Z = g.fft(zeta)
        P = g.fft(psi)
        return g.ifft(c * Z + a12 * P), g.ifft(a21 * Z + c * P)

    def linear(self, zeta, psi):
        g = self.grid
        Z = g.fft(zeta)
        P = g.fft(psi)
        return g.ifft(self.g0 / self.mu * P), g.ifft(-self.s * Z)


# model -----------------------------------------------------------------------

class WaterWavesModel:
    """Right-hand sides and time stepping for fixed bottom and parameters.

    Holds one :class:`DNOSolver` so that successive solves reuse the
    preconditioner and warm-start from the previous solution.
    """

    def __init__(self, grid, params, b=None, nz=16, solver_tol=1e-10, method="pcg",
                 integrator="lawson", system="original", filter=False, h_floor=1e-6,
                 collocation="legendre", warm_start=True):
        if not isinstance(grid, Grid):
            grid = Grid(grid)
        if grid.d != params.d:
            raise InvalidInputError(f"grid dimension {grid.d} does not match params.d={params.d}")
        if integrator not in ("rk4", "lawson"):
            raise InvalidInputError(f"unknown integrator {integrator!r}")
        if system not in ("original", "rescaled"):
            raise InvalidInputError(f"unknown system {system!r}")
        if system == "rescaled" and params.eps == 0.0:
            raise InvalidInputError("the rescaled system needs eps > 0")
        self.grid = grid
        self.params = params
        self.b = np.zeros(grid.shape) if b is None else np.broadcast_to(np.asarray(b, float), grid.shape).copy()
        self.strip = StripGrid(grid, nz, collocation)
        self.solver = DNOSolver(self.strip, params, self.b, method=method, tol=solver_tol, h_floor=h_floor)
        self.integrator = integrator
        self.system = system
        self.filter = bool(filter)
        self.warm_start = warm_start
        self.prop = _Propagator(grid, params, self.strip)
        self.nrhs = 0
        self._aux = None

    @property
    def aux_solver(self):
        """Second solver for diagnostics, so they never touch the stepping warm start."""
        if self._aux is None:
            s = self.solver
            self._aux = DNOSolver(self.strip, self.params, self.b, method=s.method, tol=s.tol,
                                  h_floor=s.h_floor)
        return self._aux

    # right-hand sides ------------------------------------------------------
    def dno(self, zeta, psi):
        x0 = self.solver._last if self.warm_start else None
        try:
            return self.solver.dno(psi, zeta, x0=x0)
        except SolverFailure:
            if x0 is None:
                raise
            return self.solver.dno(psi, zeta)

    def rhs(self, zeta, psi):
        """Original-time tendencies."""
        p = self.params
        g = self.grid
        self.nrhs += 1
        G = self.dno(zeta, psi)
        dzeta = G / p.mu
        eps, mu = p.eps, p.mu
        if eps != 0.0:
            gz = g.grad(zeta, p.gamma)
            gp = g.grad(psi, p.gamma)
            d = len(gz)

            def nonlin(Gf, *fields):
                a = fields[:d]
                c = fields[d:]
                dot = sum(x * y for x, y in zip(a, c))
                m = sum(x * x for x in a)
                v2 = sum(y * y for y in c)
                return -0.5 * eps * v2 + eps / mu * (Gf + eps * mu * dot) ** 2 / (2.0 * (1.0 + eps * eps * mu * m))

            nl = g.dealiased(nonlin, G, *gz, *gp)
        else:
            nl = 0.0
        dpsi = -zeta + nl + scaled_curvature_rhs(zeta, p, g)
        gauge = float(np.mean(dpsi))
        dpsi = dpsi - gauge
        if not (np.all(np.isfinite(dzeta)) and np.all(np.isfinite(dpsi))):
            raise NumericDomainError("non-finite tendency")
        return Tendency(dzeta, dpsi, gauge, G)

    def rhs_rescaled(self, zeta, psi):
        """Tendencies in the time ``t' = eps t``, assembled term by term."""
        p = self.params
        if p.eps == 0.0:
            raise InvalidInputError("the rescaled system needs eps > 0")
        g = self.grid
        eps, mu = p.eps, p.mu
        G = self.dno(zeta, psi)
        dzeta = G / (mu * eps)
        gz = g.grad(zeta, p.gamma)
        gp = g.grad(psi, p.gamma)
        d = len(gz)

        def nonlin(Gf, *fields):
            a = fields[:d]
            c = fields[d:]
            dot = sum(x * y for x, y in zip(a, c))
            m = sum(x * x for x in a)
            v2 = sum(y * y for y in c)
            return -0.5 * v2 + (Gf + eps * mu * dot) ** 2 / (2.0 * mu * (1.0 + eps * eps * mu * m))

        nl = g.dealiased(nonlin, G, *gz, *gp)
        # the tension term is O(1/eps) only, never 1/(eps^2 sqrt(mu))
        dpsi = -zeta / eps + nl + scaled_curvature_rhs(zeta, p, g) / eps
        gauge = float(np.mean(dpsi))
        return Tendency(dzeta, dpsi - gauge, gauge, G)

    # stepping -------------------------------------------------------------
    def _nonlinear(self, zeta, psi):
        T = self.rhs(zeta, psi)
        lz, lp = self.prop.linear(zeta, psi)
        return T, T.dzeta - lz, T.dpsi - lp

    def step(self, state, dt, first=None):
        """One step of size ``dt`` (original time).  Returns ``(new_state, rhs_at_start)``.

        Classical RK4, or RK4 in the integrating factor of the flat linear
        flow (``lawson``).  A negative ``dt`` steps backwards.  With
        ``system="rescaled"`` the step size is interpreted in ``t'``.
        """
        if not (math.isfinite(dt) and dt != 0):
            raise InvalidInputError(f"dt must be finite and nonzero, got {dt!r}")
        h = dt * self.params.eps if self.system == "rescaled" else dt
        z0, p0 = state.zeta, state.psi
        if self.integrator == "rk4":
            k1 = first if first is not None else self.rhs(z0, p0)
            k2 = self.rhs(z0 + 0.5 * h * k1.dzeta, p0 + 0.5 * h * k1.dpsi)
            k3 = self.rhs(z0 + 0.5 * h * k2.dzeta, p0 + 0.5 * h * k2.dpsi)
            k4 = self.rhs(z0 + h * k3.dzeta, p0 + h * k3.dpsi)
            zeta = z0 + h / 6 * (k1.dzeta + 2 * k2.dzeta + 2 * k3.dzeta + k4.dzeta)
            psi = p0 + h / 6 * (k1.dpsi + 2 * k2.dpsi + 2 * k3.dpsi + k4.dpsi)
        else:
            E = self.prop.apply
            if first is not None:
                lz, lp = self.prop.linear(z0, p0)
                T1, a_z, a_p = first, first.dzeta - lz, first.dpsi - lp
            else:
                T1, a_z, a_p = self._nonlinear(z0, p0)
            k1 = T1
            ez, ep = E(0.5 * h, z0, p0)
            u1 = E(0.5 * h, z0 + 0.5 * h * a_z, p0 + 0.5 * h * a_p)
            _, b_z, b_p = self._nonlinear(*u1)
            u2 = (ez + 0.5 * h * b_z, ep + 0.5 * h * b_p)
            _, c_z, c_p = self._nonlinear(*u2)
            Ehz, Ehp = E(h, z0, p0)
            cz2, cp2 = E(0.5 * h, c_z, c_p)
            u3 = (Ehz + h * cz2, Ehp + h * cp2)
            _, d_z, d_p = self._nonlinear(*u3)
            az2, ap2 = E(h, a_z, a_p)
            bcz, bcp = E(0.5 * h, b_z + c_z, b_p + c_p)
            zeta = Ehz + h / 6 * (az2 + 2 * bcz + d_z)
            psi = Ehp + h / 6 * (ap2 + 2 * bcp + d_p)
        if self.filter:
            zeta = self.grid.filter(zeta)
            psi = self.grid.filter(psi)
        psi = psi - psi.mean()
        if not (np.all(np.isfinite(zeta)) and np.all(np.isfinite(psi))):
            raise NumericDomainError("non-finite state after step")
        new = SurfaceState.__new__(SurfaceState)
        new.zeta, new.psi, new.t = zeta, psi, state.t + dt
        return new, k1

    def adaptive_step(self, state, dt, rtol=1e-8, dt_min=1e-10):
        """Step-doubling RK4.  Returns ``(new_state, dt_used, dt_next)``."""
        while True:
            if dt < dt_min:
                raise StiffnessFailure(f"step size fell below dt_min={dt_min:g}")
            try:
                big, first = self.step(state, dt)
                half, _ = self.step(state, 0.5 * dt, first=first)
                small, _ = self.step(half, 0.5 * dt)
            except (NumericDomainError, SolverFailure, VanishingDepthError):
                dt *= 0.25
                continue
            scale = max(np.max(np.abs(small.zeta)), np.max(np.abs(small.psi)), 1e-300)
            err = max(np.max(np.abs(small.zeta - big.zeta)), np.max(np.abs(small.psi - big.psi))) / scale / 15.0
            if err <= rtol:
                small.zeta = small.zeta + (small.zeta - big.zeta) / 15.0
                small.psi = small.psi + (small.psi - big.psi) / 15.0
                small.t = state.t + dt
                fac = 2.0 if err == 0 else min(2.0, 0.9 * (rtol / err) ** 0.2)
                return small, dt, dt * fac
            dt *= max(0.2, 0.9 * (rtol / err) ** 0.2)

    # diagnostics ------------------------------------------------------------
    def velocities(self, snap):
        return surface_velocities_from(snap.g_psi, snap.psi, snap.zeta, self.params, self.grid)

    def snapshot(self, state, tend=None):
        if tend is None:
            tend = self.rhs(state.zeta, state.psi)
        return Snapshot(state.t, state.zeta, state.psi, tend.dzeta, tend.dpsi, tend.g_psi)

    def hamiltonian(self, zeta, psi, g_psi=None):
        return hamiltonian(zeta, psi, self.params, self.grid, g_psi if g_psi is not None else self.dno(zeta, psi))

    def height(self, zeta):
        return height(zeta, self.b, self.params)


def hamiltonian(zeta, psi, params, grid, g_psi):
    """``|zeta|^2/2 + (G psi, psi)/(2 mu) + (1/Bo) int |grad zeta|^2 / (1 + sqrt(1 + a^2 |grad zeta|^2))``."""
    p = params
    E = 0.5 * grid.inner(zeta, zeta) + grid.inner(g_psi, psi) / (2 * p.mu)
    if p.inv_bond:
        a = p.capillary_scale
        gz = grid.grad(zeta, p.gamma)
        if a == 0.0:
            dens = 0.5 * sum(c * c for c in gz)
        else:
            dens = grid.dealiased(lambda *g: tension_energy_density([a * c for c in g]) / a**2, *gz)
        E += p.inv_bond * float(np.sum(dens)) * grid.cell
    return E


def rayleigh_taylor(record, model, index=None):
    """``a = 1 + eps (d_t + eps Vbar . grad_gamma) wbar`` at a record entry.

    ``d_t wbar`` is a centred difference over the neighbouring entries.
    """
    p = model.params
    g = model.grid
    i = record.centre(1) if index is None else index
    if i < 1 or i > len(record) - 2:
        raise NotEnoughHistory("Rayleigh-Taylor coefficient needs a neighbour on each side")
    if p.eps == 0.0:
        return np.ones(g.shape)
    dt = record.dt
    w_m, _ = model.velocities(record[i - 1])
    w_p, _ = model.velocities(record[i + 1])
    w, V = model.velocities(record[i])
    gw = g.grad(w, p.gamma)
    adv = sum(v * c for v, c in zip(V, gw))
    return 1.0 + p.eps * ((w_p - w_m) / (2 * dt) + p.eps * adv)


# functional wrappers -------------------------------------------------------

def _model_for(state, b, params, strip=None, **kw):
    if strip is not None:
        kw.setdefault("nz", strip.nz)
        kw.setdefault("collocation", strip.kind)
        grid = strip.grid
    else:
        n = state.zeta.shape
        grid = Grid(n if len(n) > 1 else n[0])
    return WaterWavesModel(grid, params, b, **kw)


def rhs_original(state, b, params, strip=None, **kw):
    return _model_for(state, b, params, strip, **kw).rhs(state.zeta, state.psi)


def rhs_rescaled(state, b, params, strip=None, **kw):
    if params.eps == 0.0:
        raise InvalidInputError("the rescaled system needs eps > 0")
    return _model_for(state, b, params, strip, **kw).rhs_rescaled(state.zeta, state.psi)


def step(state, b, params, dt, strip=None, **kw):
    return _model_for(state, b, params, strip, **kw).step(state, dt)[0]


# initial data and bottoms -------------------------------------------------

def initial_state(grid, preset="rest", amplitude=1.0, k=1, width=1.0, center=None, psi_amplitude=0.0,
                  params=None):
    """Named initial conditions: ``rest``, ``single-mode``, ``travelling`` and ``gaussian``.

    ``travelling`` is the right-going linear flat-bottom wave
    ``zeta = A cos(kx)``, ``psi = A (omega mu / g0) sin(kx)``; it needs ``params``.
    """
    if preset == "rest":
        return SurfaceState(np.zeros(grid.shape), np.zeros(grid.shape))
    x = grid.x
    if preset in ("travelling", "traveling"):
        if params is None:
            raise InvalidInputError("the travelling preset needs the parameters")
        q = math.sqrt(params.mu) * k
        g0 = q * math.tanh(q)
        w = float(dispersion_omega(k, params))
        return SurfaceState(amplitude * np.cos(k * x), amplitude * w * params.mu / g0 * np.sin(k * x))
    if preset in ("single-mode", "single_mode", "mode"):
        zeta = amplitude * np.cos(k * x)
        psi = psi_amplitude * np.sin(k * x)
        return SurfaceState(zeta, psi)
    if preset in ("gaussian", "hump"):
        c = grid.L[0] / 2 if center is None else center
        L = grid.L[0]
        r = (x - c + L / 2) % L - L / 2
        if grid.d == 2:
            Ly = grid.L[1]
            ry = grid.y - Ly / 2
            r2 = r**2 + ry**2
        else:
            r2 = r**2
        zeta = amplitude * np.exp(-r2 / width**2)
        return SurfaceState(zeta, np.zeros(grid.shape))
    raise InvalidInputError(f"unknown initial-condition preset {preset!r}")


def bottom_profile(grid, preset="flat", amplitude=0.5, k=1, width=1.0, center=None):
    if preset == "flat":
        return np.zeros(grid.shape)
    x = grid.x
    if preset in ("cosine", "cos"):
        return amplitude * np.cos(k * x)
    if preset in ("gaussian", "bump"):
        c = grid.L[0] / 2 if center is None else center
        L = grid.L[0]
        r = (x - c + L / 2) % L - L / 2
        return amplitude * np.exp(-r**2 / width**2)
    raise InvalidInputError(f"unknown bottom preset {preset!r}")


def load_field(path, grid, fmt="text"):
    """One value per grid node, from a text file or a raw float64 file."""
    if fmt == "text":
        data = np.loadtxt(path, dtype=float).ravel()
    elif fmt in ("binary", "float64"):
        data = np.fromfile(path, dtype="<f8")
    else:
        raise InvalidInputError(f"unknown data format {fmt!r}")
    if data.size != grid.size:
        raise InvalidInputError(f"{path}: expected {grid.size} values, got {data.size}")
    if not np.all(np.isfinite(data)):
        raise InvalidInputError(f"{path}: non-finite values")
    return data.reshape(grid.shape)


# run driver ---------------------------------------------------------------

@dataclass
class RunResult:
    trip_reason: str | None
    trip_time: float | None
    final: SurfaceState
    record: TrajectoryRecord
    diagnostics: list = field(default_factory=list)
    steps: int = 0
    message: str = ""
    filtered: bool = False

    @property
    def completed(self):
        return self.trip_reason is None


def run_simulation(initial, b, params, T_end, dt, grid=None, model=None, monitors=True,
                   output_interval=None, N_d=2, h_min=None, a0=None, energy_ratio=2.0,
                   on_record=None, adaptive=False, rtol=1e-8, dt_min=1e-10, energies=False,
                   monitor_interval=None, **model_kw):
    """Integrate up to ``T_end`` (original time) or until a monitor trips.

    Monitors: ``min h < h_min/2``, ``min a < a0/2`` and
    ``energy > energy_ratio * energy(0)``.  ``h_min`` and ``a0`` default to
    the values of the initial data; the reference energy is the one at
    ``t = 0``.  With a fixed step the history is back-filled by integrating a
    few steps backwards and extended a few steps past ``T_end``, so records
    fall exactly on ``0, output_interval, ...`` up to ``T_end``.  Solver
    failures end the run with reason ``"numerical"``.
    ``monitor_interval`` thins the diagnostic monitors (the pointwise height
    check still runs every step).
    """
    from .energy import _depth, diagnostics_at  # circular at import time

    if not (math.isfinite(dt) and dt > 0):
        raise InvalidInputError(f"dt must be > 0, got {dt!r}")
    if not (math.isfinite(T_end) and T_end >= 0):
        raise InvalidInputError(f"T_end must be >= 0, got {T_end!r}")

    if model is None:
        if grid is None:
            n = initial.zeta.shape
            grid = Grid(n if len(n) > 1 else n[0])
        model = WaterWavesModel(grid, params, b, **model_kw)
    p = model.params
    record = TrajectoryRecord(max(5, 2 * N_d + 1))
    state = initial.copy()
    out = RunResult(None, None, state, record, [], 0, "", model.filter)
    h0 = float(np.min(model.height(state.zeta)))
    h_ref = h0 if h_min is None else h_min
    if h0 <= model.solver.h_floor or (monitors and h0 < h_ref / 2):
        out.trip_reason, out.trip_time = "height", state.t
        out.message = f"initial min height {h0:.6g}"
        return out
    every = None if output_interval is None else max(1, int(round(output_interval / dt)))
    mevery = 1 if monitor_interval is None else max(1, int(round(monitor_interval / dt)))
    nsteps = int(math.ceil(T_end / dt - 1e-9))
    depth = max(_depth(N_d), 1)
    need = 2 * depth + 1
    ref = {"E": None, "a": a0}
    last_c = [None]
    t_stop = T_end * (1 - 1e-12)

    def process():
        """Diagnostics and monitors at the centre of the record, if one is due."""
        if len(record) < need:
            return None
        snap = record[record.centre(depth)]
        if adaptive:
            c = out.steps
        else:
            c = int(round(snap.t / record.dt))
            if c == last_c[0] or c > nsteps:
                return None
            last_c[0] = c
        due = every is not None and c % every == 0
        check = monitors and c % mevery == 0
        if not (due or check):
            return None
        diag = diagnostics_at(record, model, N_d=N_d, energies=energies and due)
        if ref["E"] is None and diag.energy_EN is not None:
            ref["E"] = diag.energy_EN
            diag.flags.append("reference")
        if ref["a"] is None:
            ref["a"] = diag.min_a
        if due:
            out.diagnostics.append(diag)
            if on_record:
                on_record(diag)
        if check:
            a_ref, E_ref = ref["a"], ref["E"]
            if diag.min_h < h_ref / 2:
                return "height", diag.time
            if a_ref is not None and a_ref > 0 and diag.min_a < a_ref / 2:
                return "rayleigh-taylor", diag.time
            if E_ref and diag.energy_EN > energy_ratio * E_ref:
                return "energy", diag.time
        return None

    if not adaptive:
        # history before t = 0 so that diagnostics are centred on the output times
        try:
            back = [state]
            for _ in range(depth):
                back.append(model.step(back[-1], -dt)[0])
            for s in reversed(back[1:]):
                record.push(model.snapshot(s))
        except (CapwavesError, FloatingPointError):
            record.clear()

    first = None
    prev_used = None
    try:
        while (state.t < t_stop) if adaptive else (out.steps < nsteps):
            if adaptive:
                new, used, nxt = model.adaptive_step(state, min(dt, T_end - state.t), rtol, dt_min)
                tend = model.rhs(state.zeta, state.psi)
                # the record needs uniform spacing; restart it when the step changes
                if prev_used is not None and abs(used - prev_used) > 1e-12 * used:
                    record.clear()
                prev_used = used
                dt = nxt
            else:
                new, tend = model.step(state, dt, first)
            record.push(model.snapshot(state, tend))
            state = new
            out.steps += 1
            first = None
            tripped = process()
            if tripped:
                out.trip_reason, out.trip_time = tripped
                break
            if monitors:
                hm = float(np.min(model.height(state.zeta)))
                if hm < h_ref / 2:
                    out.trip_reason, out.trip_time = "height", state.t
                    break
    except (CapwavesError, FloatingPointError) as exc:
        out.trip_reason, out.trip_time = "numerical", state.t
        out.message = f"{type(exc).__name__}: {exc}"
    if not adaptive and out.trip_reason is None:
        # a few steps past T_end, only to centre the diagnostics up to T_end
        tail = state
        try:
            for _ in range(depth):
                nxt_state, tend = model.step(tail, dt)
                record.push(model.snapshot(tail, tend))
                tail = nxt_state
                tripped = process()
                if tripped:
                    out.trip_reason, out.trip_time = tripped
                    break
            else:
                record.push(model.snapshot(tail))
                tripped = process()
                if tripped:
                    out.trip_reason, out.trip_time = tripped
        except (CapwavesError, FloatingPointError):
            pass
    out.final = state
    return out
